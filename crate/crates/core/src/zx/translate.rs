use std::f64::consts::PI;

use super::{NodeKind, ZxDiagram};
use crate::circuit::{Circuit, GateKind};

/// Direct gate-by-gate translation. Inputs and outputs are ordered by qubit.
pub fn circuit_to_zx(c: &Circuit) -> ZxDiagram {
    let mut g = ZxDiagram::new();
    let mut last: Vec<usize> = (0..c.num_qubits).map(|_| g.add_input()).collect();
    for gate in &c.gates {
        match gate.kind {
            GateKind::H => {
                let q = gate.qubits[0];
                let h = g.add_node(NodeKind::HBox, 0.0);
                g.add_edge(last[q], h);
                last[q] = h;
            }
            GateKind::X => {
                let q = gate.qubits[0];
                let s = g.add_spider(NodeKind::X, PI);
                g.add_edge(last[q], s);
                last[q] = s;
            }
            GateKind::Cnot => {
                let (ctl, tgt) = (gate.qubits[0], gate.qubits[1]);
                let z = g.add_spider(NodeKind::Z, 0.0);
                let x = g.add_spider(NodeKind::X, 0.0);
                g.add_edge(last[ctl], z);
                g.add_edge(last[tgt], x);
                g.add_edge(z, x);
                last[ctl] = z;
                last[tgt] = x;
            }
            _ => {
                let q = gate.qubits[0];
                let s = g.add_spider(NodeKind::Z, gate.z_phase().unwrap_or(0.0));
                g.add_edge(last[q], s);
                last[q] = s;
            }
        }
    }
    for l in last {
        let o = g.add_output();
        g.add_edge(l, o);
    }
    g
}
