use std::f64::consts::PI;

use super::route::{Region, Target};
use super::search::Embedder;
use super::state::{EmbeddingState, Leaf};
use super::CompileConfig;
use crate::circuit::{Circuit, GateKind};
use crate::error::{Error, Result};
use crate::pipe::{Axis, Color, Cube, CubeKind, Dir, PipeDiagram};

const LEAF_ORDER: [Dir; 5] = [
    Dir {
        axis: Axis::X,
        positive: true,
    },
    Dir {
        axis: Axis::X,
        positive: false,
    },
    Dir {
        axis: Axis::Y,
        positive: true,
    },
    Dir {
        axis: Axis::Y,
        positive: false,
    },
    Dir::PZ,
];

fn other(a: Axis) -> Axis {
    Axis::third(Axis::Z, a)
}

/// Blue axis the worldline carries through a junction.
fn wire_blue(o: Axis, c: Color) -> Axis {
    match c {
        Color::Blue => o,
        Color::Red => other(o),
    }
}

#[derive(Clone, Copy)]
enum Slot {
    Junction(Axis, Color),
    Hadamard,
}

struct Lines {
    anchors: Vec<[i32; 2]>,
    /// Per qubit: gate cubes on the worldline by height.
    slots: Vec<Vec<(i32, Slot, usize)>>,
    /// Blue axis at the top of each worldline, once fixed.
    frame: Vec<Option<Axis>>,
}

impl Lines {
    /// Orientations a junction of colour `c` may take on qubit `q`.
    fn orientations(&self, q: usize, c: Color) -> Vec<Axis> {
        match self.frame[q] {
            Some(b) => vec![if c == Color::Blue { b } else { other(b) }],
            None => vec![Axis::X, Axis::Y],
        }
    }

    fn junction(&mut self, st: &mut EmbeddingState, q: usize, z: i32, o: Axis, c: Color) -> usize {
        let [x, y] = self.anchors[q];
        let id = st.add_cube(Cube::standard(0, [x, y, z], o, c));
        self.slots[q].push((z, Slot::Junction(o, c), id));
        self.frame[q] = Some(wire_blue(o, c));
        id
    }
}

/// Gate-by-gate compilation: every qubit keeps a straight worldline and
/// each gate gets its own time window, so no two gates overlap in time.
pub fn compile_baseline(c: &Circuit, cfg: &CompileConfig) -> Result<PipeDiagram> {
    c.validate()?;
    cfg.check(c)?;
    let n = c.num_qubits;
    let mut st = EmbeddingState::new(Embedder::grid_for(cfg), cfg.grid, 0, 0);
    let mut lines = Lines {
        anchors: (0..n).map(|q| Embedder::anchor(cfg, q)).collect(),
        slots: vec![Vec::new(); n],
        frame: vec![None; n],
    };
    let mut inputs = Vec::new();
    for q in 0..n {
        let [x, y] = lines.anchors[q];
        inputs.push(st.add_cube(Cube::plain(0, [x, y, 0], CubeKind::BoundaryPort)));
        st.grid.block_column([x, y]);
    }
    let gmax = st.grid.max();
    let gmin = st.grid.min;

    let mut t = 1;
    for g in &c.gates {
        let q = g.qubits[0];
        match g.kind {
            GateKind::H => {
                let [x, y] = lines.anchors[q];
                let id = st.add_cube(Cube::plain(0, [x, y, t], CubeKind::Hadamard));
                lines.slots[q].push((t, Slot::Hadamard, id));
                lines.frame[q] = lines.frame[q].map(other);
                t += 1;
            }
            GateKind::Cnot => {
                let tq = g.qubits[1];
                let mut placed = None;
                'widen: for span in 1..=4 {
                    let mut best: Option<(usize, Axis, Axis)> = None;
                    for &ot in &lines.orientations(tq, Color::Red) {
                        for &oc in &lines.orientations(q, Color::Blue) {
                            let cp = st.checkpoint();
                            let [tx, ty] = lines.anchors[tq];
                            let [cx, cy] = lines.anchors[q];
                            let a = st.add_cube(Cube::standard(0, [tx, ty, t], ot, Color::Red));
                            let b =
                                st.add_cube(Cube::standard(0, [cx, cy, t + span], oc, Color::Blue));
                            let region = Region {
                                min: [gmin[0], gmin[1], t],
                                max: [gmax[0], gmax[1], t + span],
                            };
                            if let Some(r) =
                                st.find_route(b, Target::Cube(a), false, region, t + span)
                            {
                                if best.is_none_or(|x| r.len() < x.0) {
                                    best = Some((r.len(), ot, oc));
                                }
                            }
                            st.rollback(cp);
                        }
                    }
                    if let Some((_, ot, oc)) = best {
                        let a = lines.junction(&mut st, tq, t, ot, Color::Red);
                        let b = lines.junction(&mut st, q, t + span, oc, Color::Blue);
                        let region = Region {
                            min: [gmin[0], gmin[1], t],
                            max: [gmax[0], gmax[1], t + span],
                        };
                        let r = st
                            .find_route(b, Target::Cube(a), false, region, t + span)
                            .expect("route found before");
                        st.apply_route(&r);
                        placed = Some(span);
                        break 'widen;
                    }
                }
                let span = placed.ok_or_else(|| {
                    Error::Embed(format!("no room for CNOT {q}->{tq} at step {t}"))
                })?;
                t += span + 1;
            }
            kind => {
                let (color, leaf) = if kind == GateKind::X {
                    (
                        Color::Red,
                        Leaf {
                            x_type: true,
                            angle: PI,
                        },
                    )
                } else {
                    let a = g.z_phase().expect("diagonal gate");
                    (
                        Color::Blue,
                        Leaf {
                            x_type: false,
                            angle: a,
                        },
                    )
                };
                let mut top = None;
                for o in lines.orientations(q, color) {
                    let cp = st.checkpoint();
                    let [x, y] = lines.anchors[q];
                    let j = st.add_cube(Cube::standard(0, [x, y, t], o, color));
                    if st.place_leaf(j, leaf, &LEAF_ORDER, (t, t + 1)) {
                        let hi = st.partial.cubes[j..]
                            .iter()
                            .map(|c| c.pos[2])
                            .max()
                            .unwrap_or(t);
                        let ids = st.partial.cubes.len();
                        st.rollback(cp);
                        let j2 = lines.junction(&mut st, q, t, o, color);
                        let ok = st.place_leaf(j2, leaf, &LEAF_ORDER, (t, t + 1));
                        debug_assert!(ok && st.partial.cubes.len() == ids);
                        top = Some(hi);
                        break;
                    }
                    st.rollback(cp);
                }
                let hi = top.ok_or_else(|| {
                    Error::Embed(format!("no free side for a phase on qubit {q}"))
                })?;
                t = hi + 1;
            }
        }
    }

    let z_end = (t - 1).max(1);
    let mut outputs = Vec::new();
    for q in 0..n {
        let [x, y] = lines.anchors[q];
        st.grid.unblock_column([x, y]);
        let mut slots = std::mem::take(&mut lines.slots[q]);
        slots.sort_by_key(|s| s.0);
        // blue axis on the pipe entering height 1
        let mut blue = Axis::X;
        if let Some(k) = slots.iter().position(|s| matches!(s.1, Slot::Junction(..))) {
            let Slot::Junction(o, c) = slots[k].1 else {
                unreachable!()
            };
            blue = wire_blue(o, c);
            for s in &slots[..k] {
                if matches!(s.1, Slot::Hadamard) {
                    blue = other(blue);
                }
            }
        }
        let mut prev = inputs[q];
        let mut it = slots.iter().peekable();
        for z in 1..=z_end + 1 {
            let id = match it.peek() {
                Some(&&(sz, slot, id)) if sz == z => {
                    it.next();
                    st.connect(prev, id, blue);
                    if matches!(slot, Slot::Hadamard) {
                        blue = other(blue);
                    }
                    id
                }
                _ => {
                    let cube = if z > z_end {
                        Cube::plain(0, [x, y, z], CubeKind::BoundaryPort)
                    } else {
                        Cube::standard(0, [x, y, z], blue, Color::Blue)
                    };
                    let id = st.add_cube(cube);
                    st.connect(prev, id, blue);
                    id
                }
            };
            prev = id;
        }
        outputs.push(prev);
    }
    let mut p = st.partial;
    p.inputs = inputs;
    p.outputs = outputs;
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{generate_benchmark, Family, Gate};
    use crate::pipe::{space_time_volume, validate_pipe_diagram};
    use crate::verify::check_semantic_equivalence;

    fn adjacent() -> CompileConfig {
        CompileConfig {
            grid: (2, 1),
            pitch: 1,
            ..CompileConfig::default()
        }
    }

    #[test]
    fn single_cnot_is_eight() {
        let c = Circuit::with_gates(2, vec![Gate::cnot(0, 1)]).unwrap();
        let p = compile_baseline(&c, &adjacent()).unwrap();
        assert!(validate_pipe_diagram(&p).is_empty());
        assert_eq!(space_time_volume(&p), 8);
        assert!(check_semantic_equivalence(&c, &p, 1e-9).unwrap());
    }

    #[test]
    fn empty_circuit_is_one_step() {
        let c = Circuit::new(4);
        let cfg = CompileConfig {
            grid: (2, 2),
            ..CompileConfig::default()
        };
        let p = compile_baseline(&c, &cfg).unwrap();
        assert_eq!(p.time_steps(), 3);
        let bb = p.bounding_box().unwrap();
        assert_eq!(bb.extent()[2], 1);
        assert_eq!(space_time_volume(&p), 3 * 3);
        assert_eq!(p.count_kind(CubeKind::Standard), 4);
    }

    #[test]
    fn ghz_windows_are_sequential() {
        let c = generate_benchmark(Family::Ghz, 16, 0).unwrap();
        let p = compile_baseline(&c, &CompileConfig::default()).unwrap();
        assert!(validate_pipe_diagram(&p).is_empty());
        assert!(p.bounding_box().unwrap().extent()[2] >= 30);
    }

    #[test]
    fn every_gate_kind_verifies() {
        let c = crate::circuit::parse_qasm(
            "qreg q[3]; h q[0]; s q[1]; sdg q[2]; t q[0]; tdg q[1]; rz(0.3) q[2]; \
             x q[0]; z q[1]; cx q[0],q[2]; cx q[2],q[1]; h q[2]; x q[2];",
        )
        .unwrap();
        let cfg = CompileConfig {
            grid: (2, 2),
            ..CompileConfig::default()
        };
        let p = compile_baseline(&c, &cfg).unwrap();
        let v = validate_pipe_diagram(&p);
        assert!(v.is_empty(), "{v:?}");
        assert!(check_semantic_equivalence(&c, &p, 1e-9).unwrap());
    }

    #[test]
    fn random_circuits_verify() {
        let cfg = CompileConfig {
            grid: (2, 2),
            ..CompileConfig::default()
        };
        for seed in 0..20 {
            let c = crate::circuit::random_circuit(4, 8, seed);
            let p = compile_baseline(&c, &cfg).unwrap();
            assert!(validate_pipe_diagram(&p).is_empty());
            assert!(
                check_semantic_equivalence(&c, &p, 1e-9).unwrap(),
                "seed {seed}"
            );
        }
    }
}
