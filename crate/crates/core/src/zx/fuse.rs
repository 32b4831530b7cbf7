use super::{phase_is_zero, NodeKind, ZxDiagram};

/// A junction cube has four ports.
pub const DEFAULT_MAX_DEGREE: usize = 4;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct FuseStats {
    pub z_fusions: usize,
    pub x_fusions: usize,
    pub identities_removed: usize,
}

/// Wires a spider needs once embedded; a nonzero phase occupies one port
/// with its cap.
fn effective_degree(edges: usize, phase: f64) -> usize {
    edges + usize::from(!phase_is_zero(phase))
}

pub fn fuse_all(g: &ZxDiagram, max_degree: usize) -> ZxDiagram {
    fuse_all_with_stats(g, max_degree).0
}

pub fn fuse_all_with_stats(g: &ZxDiagram, max_degree: usize) -> (ZxDiagram, FuseStats) {
    let mut g = g.clone();
    let mut stats = FuseStats::default();
    while try_fuse(&mut g, max_degree, &mut stats) || try_remove_identity(&mut g, &mut stats) {}
    (g, stats)
}

/// Only the identity-elimination half of [`fuse_all`].
pub fn remove_identities(g: &ZxDiagram) -> ZxDiagram {
    let mut g = g.clone();
    let mut stats = FuseStats::default();
    while try_remove_identity(&mut g, &mut stats) {}
    g
}

fn try_fuse(g: &mut ZxDiagram, max_degree: usize, stats: &mut FuseStats) -> bool {
    let ids: Vec<usize> = g.spider_ids().collect();
    for u in ids {
        let ku = g.kind(u);
        for v in g.distinct_neighbors(u) {
            if v < u || g.kind(v) != ku || g.multiplicity(u, v) != 1 {
                continue;
            }
            let phase = g.phase(u) + g.phase(v);
            let deg = g.degree(u) + g.degree(v) - 2;
            if effective_degree(deg, phase) > max_degree {
                continue;
            }
            g.remove_edge(u, v);
            for n in g.neighbors(v).to_vec() {
                g.add_edge(u, n);
            }
            g.remove_node(v);
            g.set_phase(u, phase);
            match ku {
                NodeKind::Z => stats.z_fusions += 1,
                _ => stats.x_fusions += 1,
            }
            return true;
        }
    }
    false
}

fn try_remove_identity(g: &mut ZxDiagram, stats: &mut FuseStats) -> bool {
    let ids: Vec<usize> = g.spider_ids().collect();
    for v in ids {
        if g.degree(v) != 2 || !phase_is_zero(g.phase(v)) {
            continue;
        }
        let (a, b) = (g.neighbors(v)[0], g.neighbors(v)[1]);
        if a == b {
            continue;
        }
        g.remove_node(v);
        g.add_edge(a, b);
        stats.identities_removed += 1;
        return true;
    }
    false
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::circuit::{Circuit, Gate, GateKind};
    use crate::zx::{circuit_to_zx, equivalent_up_to_scalar, evaluate_tensor, random_diagram};

    #[test]
    fn quarter_phases_add() {
        let c = Circuit::with_gates(
            1,
            vec![Gate::single(GateKind::T, 0), Gate::single(GateKind::T, 0)],
        )
        .unwrap();
        let (f, st) = fuse_all_with_stats(&circuit_to_zx(&c), 4);
        let s: Vec<_> = f.spider_ids().collect();
        assert_eq!(s.len(), 1);
        assert!((f.phase(s[0]) - PI / 2.0).abs() < 1e-12);
        assert_eq!(st.z_fusions, 1);
    }

    #[test]
    fn degree_cap_blocks_fusion() {
        // fused degree would be 5
        let mut g = ZxDiagram::new();
        let a = g.add_spider(NodeKind::Z, 0.0);
        let b = g.add_spider(NodeKind::Z, 0.0);
        g.add_edge(a, b);
        for s in [a, a, b, b, b] {
            let o = g.add_output();
            g.add_edge(s, o);
        }
        let (f, st) = fuse_all_with_stats(&g, 4);
        assert_eq!(st.z_fusions, 0);
        assert_eq!(f.num_spiders(), 2);
    }

    #[test]
    fn cap_counts_phase() {
        let c = Circuit::with_gates(
            2,
            vec![
                Gate::cnot(0, 1),
                Gate::cnot(0, 1),
                Gate::single(GateKind::S, 0),
            ],
        )
        .unwrap();
        let (f, st) = fuse_all_with_stats(&circuit_to_zx(&c), 4);
        // the two controls fuse (degree 4); the S phase would need a fifth port
        assert_eq!(st.z_fusions, 1);
        assert_eq!(
            f.spider_ids().filter(|&v| f.kind(v) == NodeKind::Z).count(),
            2
        );
    }

    #[test]
    fn parallel_edges_are_not_fused() {
        let mut g = ZxDiagram::new();
        let a = g.add_spider(NodeKind::X, 0.0);
        let b = g.add_spider(NodeKind::X, 0.0);
        g.add_edge(a, b);
        g.add_edge(a, b);
        let i = g.add_input();
        let o = g.add_output();
        g.add_edge(i, a);
        g.add_edge(b, o);
        let f = fuse_all(&g, 4);
        assert_eq!(f.num_spiders(), 2);
    }

    #[test]
    fn identities_disappear() {
        let c = Circuit::with_gates(
            1,
            vec![Gate::single(GateKind::S, 0), Gate::single(GateKind::Sdg, 0)],
        )
        .unwrap();
        let f = fuse_all(&circuit_to_zx(&c), 4);
        assert_eq!(f.num_spiders(), 0);
        assert_eq!(f.neighbors(f.inputs[0]), &[f.outputs[0]]);
    }

    proptest::proptest! {
        #[test]
        fn fusion_is_sound_and_idempotent(spiders in 1usize..7, bnd in 0usize..7, extra in 0usize..4, seed in 0u64..10_000) {
            let g = random_diagram(spiders, bnd, extra, seed);
            let f = fuse_all(&g, DEFAULT_MAX_DEGREE);
            f.check().unwrap();
            proptest::prop_assert!(f.num_spiders() <= g.num_spiders());
            proptest::prop_assert_eq!(f.inputs.clone(), g.inputs.clone());
            proptest::prop_assert_eq!(f.outputs.clone(), g.outputs.clone());
            let ff = fuse_all(&f, DEFAULT_MAX_DEGREE);
            proptest::prop_assert!(ff.same_structure(&f));
            let a = evaluate_tensor(&g).unwrap();
            let b = evaluate_tensor(&f).unwrap();
            proptest::prop_assert!(equivalent_up_to_scalar(&a, &b, 1e-9).unwrap());
        }
    }
}
