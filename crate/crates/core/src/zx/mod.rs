//! ZX-diagram intermediate representation.

mod fuse;
mod json;
mod tensor;
mod translate;

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use fuse::{fuse_all, fuse_all_with_stats, remove_identities, FuseStats, DEFAULT_MAX_DEGREE};
pub use json::{diagram_from_json, diagram_to_json};
pub use tensor::{equivalent_up_to_scalar, evaluate_tensor, LinearMap, MAX_OPEN_WIRES};
pub use translate::circuit_to_zx;

pub const TAU: f64 = 2.0 * PI;
pub const PHASE_TOL: f64 = 1e-12;

/// Reduce an angle into `[0, 2π)`, snapping values within tolerance of a
/// full turn to zero.
pub fn normalize_phase(a: f64) -> f64 {
    let r = a.rem_euclid(TAU);
    if r < PHASE_TOL || TAU - r < PHASE_TOL {
        0.0
    } else {
        r
    }
}

pub fn phase_is_zero(a: f64) -> bool {
    normalize_phase(a) == 0.0
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NodeKind {
    Z,
    X,
    HBox,
    Boundary,
}

impl NodeKind {
    pub fn is_spider(self) -> bool {
        matches!(self, NodeKind::Z | NodeKind::X)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Node {
    pub kind: NodeKind,
    pub phase: f64,
}

/// Nodes are addressed by stable ids; removed nodes leave holes so ids of
/// the survivors never change.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ZxDiagram {
    nodes: Vec<Option<Node>>,
    adj: Vec<Vec<usize>>,
    pub inputs: Vec<usize>,
    pub outputs: Vec<usize>,
}

impl ZxDiagram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_node(&mut self, kind: NodeKind, phase: f64) -> usize {
        let phase = if kind.is_spider() {
            normalize_phase(phase)
        } else {
            0.0
        };
        self.nodes.push(Some(Node { kind, phase }));
        self.adj.push(Vec::new());
        self.nodes.len() - 1
    }

    pub fn add_spider(&mut self, kind: NodeKind, phase: f64) -> usize {
        debug_assert!(kind.is_spider());
        self.add_node(kind, phase)
    }

    pub fn add_input(&mut self) -> usize {
        let id = self.add_node(NodeKind::Boundary, 0.0);
        self.inputs.push(id);
        id
    }

    pub fn add_output(&mut self) -> usize {
        let id = self.add_node(NodeKind::Boundary, 0.0);
        self.outputs.push(id);
        id
    }

    pub fn add_edge(&mut self, a: usize, b: usize) {
        assert!(a != b, "self-loop on node {a}");
        assert!(self.contains(a) && self.contains(b));
        self.adj[a].push(b);
        self.adj[b].push(a);
    }

    /// Remove one copy of the edge `a`–`b`. Returns false when absent.
    pub fn remove_edge(&mut self, a: usize, b: usize) -> bool {
        let Some(i) = self.adj[a].iter().position(|&x| x == b) else {
            return false;
        };
        self.adj[a].swap_remove(i);
        let j = self.adj[b]
            .iter()
            .position(|&x| x == a)
            .expect("asymmetric adjacency");
        self.adj[b].swap_remove(j);
        true
    }

    pub fn remove_node(&mut self, v: usize) {
        for n in std::mem::take(&mut self.adj[v]) {
            if let Some(j) = self.adj[n].iter().position(|&x| x == v) {
                self.adj[n].swap_remove(j);
            }
        }
        self.nodes[v] = None;
        self.inputs.retain(|&x| x != v);
        self.outputs.retain(|&x| x != v);
    }

    pub fn contains(&self, v: usize) -> bool {
        matches!(self.nodes.get(v), Some(Some(_)))
    }

    pub fn node(&self, v: usize) -> &Node {
        self.nodes[v].as_ref().expect("dangling node id")
    }

    pub fn kind(&self, v: usize) -> NodeKind {
        self.node(v).kind
    }

    pub fn phase(&self, v: usize) -> f64 {
        self.node(v).phase
    }

    pub fn set_phase(&mut self, v: usize, phase: f64) {
        if let Some(n) = self.nodes[v].as_mut() {
            n.phase = normalize_phase(phase);
        }
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    /// Distinct neighbours in ascending order.
    pub fn distinct_neighbors(&self, v: usize) -> Vec<usize> {
        let mut n = self.adj[v].clone();
        n.sort_unstable();
        n.dedup();
        n
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn multiplicity(&self, a: usize, b: usize) -> usize {
        self.adj[a].iter().filter(|&&x| x == b).count()
    }

    /// Upper bound on ids (including removed slots).
    pub fn capacity(&self) -> usize {
        self.nodes.len()
    }

    pub fn node_ids(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.nodes.len()).filter(move |&i| self.nodes[i].is_some())
    }

    pub fn spider_ids(&self) -> impl Iterator<Item = usize> + '_ {
        self.node_ids().filter(move |&i| self.kind(i).is_spider())
    }

    pub fn num_nodes(&self) -> usize {
        self.node_ids().count()
    }

    pub fn num_spiders(&self) -> usize {
        self.spider_ids().count()
    }

    pub fn num_boundaries(&self) -> usize {
        self.inputs.len() + self.outputs.len()
    }

    /// Edge multiset as sorted `(min, max)` pairs.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for a in self.node_ids() {
            for &b in &self.adj[a] {
                if a < b {
                    out.push((a, b));
                }
            }
        }
        out.sort_unstable();
        out
    }

    pub fn num_edges(&self) -> usize {
        self.node_ids().map(|v| self.adj[v].len()).sum::<usize>() / 2
    }

    /// Check the structural invariants, returning a description of the
    /// first violation.
    pub fn check(&self) -> Result<(), String> {
        for v in self.node_ids() {
            let n = self.node(v);
            if self.adj[v].contains(&v) {
                return Err(format!("self-loop on node {v}"));
            }
            match n.kind {
                NodeKind::Boundary => {
                    if self.degree(v) != 1 {
                        return Err(format!("boundary {v} has degree {}", self.degree(v)));
                    }
                    let hits = self
                        .inputs
                        .iter()
                        .chain(&self.outputs)
                        .filter(|&&x| x == v)
                        .count();
                    if hits != 1 {
                        return Err(format!("boundary {v} listed {hits} times"));
                    }
                }
                NodeKind::HBox if self.degree(v) != 2 => {
                    return Err(format!("hadamard box {v} has degree {}", self.degree(v)));
                }
                _ => {}
            }
            if !(0.0..TAU).contains(&n.phase) {
                return Err(format!("phase of {v} not normalized"));
            }
        }
        for &b in self.inputs.iter().chain(&self.outputs) {
            if !self.contains(b) || self.kind(b) != NodeKind::Boundary {
                return Err(format!("port {b} is not a boundary node"));
            }
        }
        Ok(())
    }

    /// Compact copy with ids renumbered densely in ascending order.
    pub fn compacted(&self) -> ZxDiagram {
        let mut map = vec![usize::MAX; self.nodes.len()];
        let mut out = ZxDiagram::new();
        for v in self.node_ids() {
            let n = self.node(v);
            map[v] = out.add_node(n.kind, n.phase);
        }
        for (a, b) in self.edges() {
            out.add_edge(map[a], map[b]);
        }
        out.inputs = self.inputs.iter().map(|&v| map[v]).collect();
        out.outputs = self.outputs.iter().map(|&v| map[v]).collect();
        out
    }

    /// Structural equality up to dense renumbering.
    pub fn same_structure(&self, other: &ZxDiagram) -> bool {
        let a = self.compacted();
        let b = other.compacted();
        a.nodes == b.nodes
            && a.edges() == b.edges()
            && a.inputs == b.inputs
            && a.outputs == b.outputs
    }
}

/// Random diagram for property tests: `spiders` Z/X spiders joined by
/// random (possibly parallel) edges, some carrying Hadamard boxes, with
/// `boundaries` open wires split between inputs and outputs.
pub fn random_diagram(
    spiders: usize,
    boundaries: usize,
    extra_edges: usize,
    seed: u64,
) -> ZxDiagram {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = ZxDiagram::new();
    let spiders = spiders.max(1);
    let ids: Vec<usize> = (0..spiders)
        .map(|_| {
            let kind = if rng.gen_bool(0.5) {
                NodeKind::Z
            } else {
                NodeKind::X
            };
            let phase = match rng.gen_range(0..3) {
                0 => 0.0,
                1 => rng.gen_range(0..8) as f64 * PI / 4.0,
                _ => rng.gen_range(0.0..TAU),
            };
            g.add_spider(kind, phase)
        })
        .collect();
    let connect = |g: &mut ZxDiagram, rng: &mut ChaCha8Rng, a: usize, b: usize| {
        if rng.gen_bool(0.25) {
            let h = g.add_node(NodeKind::HBox, 0.0);
            g.add_edge(a, h);
            g.add_edge(h, b);
        } else {
            g.add_edge(a, b);
        }
    };
    for i in 1..spiders {
        let j = rng.gen_range(0..i);
        connect(&mut g, &mut rng, ids[i], ids[j]);
    }
    if spiders > 1 {
        for _ in 0..extra_edges {
            let a = rng.gen_range(0..spiders);
            let b = (a + rng.gen_range(1..spiders)) % spiders;
            connect(&mut g, &mut rng, ids[a], ids[b]);
        }
    }
    let n_in = if boundaries == 0 {
        0
    } else {
        rng.gen_range(0..=boundaries)
    };
    for k in 0..boundaries {
        let b = if k < n_in {
            g.add_input()
        } else {
            g.add_output()
        };
        let s = ids[rng.gen_range(0..spiders)];
        g.add_edge(b, s);
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phase_normalization() {
        assert_eq!(normalize_phase(TAU), 0.0);
        assert_eq!(normalize_phase(-1e-13), 0.0);
        assert!((normalize_phase(-PI / 2.0) - 1.5 * PI).abs() < 1e-15);
        assert!((normalize_phase(5.0 * PI) - PI).abs() < 1e-12);
    }

    #[test]
    fn edge_bookkeeping() {
        let mut g = ZxDiagram::new();
        let a = g.add_spider(NodeKind::Z, 0.0);
        let b = g.add_spider(NodeKind::Z, 0.0);
        g.add_edge(a, b);
        g.add_edge(a, b);
        assert_eq!(g.multiplicity(a, b), 2);
        assert_eq!(g.edges(), vec![(a, b), (a, b)]);
        assert!(g.remove_edge(b, a));
        assert_eq!(g.num_edges(), 1);
        g.remove_node(a);
        assert_eq!(g.degree(b), 0);
        assert_eq!(g.num_nodes(), 1);
    }

    #[test]
    fn random_diagrams_are_well_formed() {
        for seed in 0..50 {
            let g = random_diagram(5, 6, 4, seed);
            g.check().unwrap();
            assert_eq!(g.num_boundaries(), 6);
        }
    }
}
