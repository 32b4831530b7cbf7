use std::collections::HashMap;
use std::f64::consts::FRAC_PI_2;

use super::{validate_pipe_diagram, Color, CubeKind, PipeDiagram};
use crate::error::{Error, Result};
use crate::zx::{remove_identities, NodeKind, ZxDiagram};

/// Read a valid pipe diagram back as a ZX diagram, collapsing identity
/// runs.
pub fn interpret_pipe_as_zx(p: &PipeDiagram) -> Result<ZxDiagram> {
    let violations = validate_pipe_diagram(p);
    if let Some(v) = violations.first() {
        return Err(Error::InvalidPipe(format!(
            "{v} ({} violations)",
            violations.len()
        )));
    }
    let mut g = ZxDiagram::new();
    let mut node_of: HashMap<usize, usize> = HashMap::new();
    for &id in &p.inputs {
        node_of.insert(id, g.add_input());
    }
    for &id in &p.outputs {
        node_of.insert(id, g.add_output());
    }
    for c in &p.cubes {
        let n = match c.kind {
            CubeKind::BoundaryPort => continue,
            CubeKind::Standard => match c.color {
                Some(Color::Blue) => g.add_spider(NodeKind::Z, 0.0),
                _ => g.add_spider(NodeKind::X, 0.0),
            },
            CubeKind::Hadamard => g.add_node(NodeKind::HBox, 0.0),
            CubeKind::YCap => g.add_spider(NodeKind::Z, FRAC_PI_2),
            CubeKind::InjectionPort => g.add_spider(NodeKind::Z, c.angle.unwrap_or(0.0)),
        };
        node_of.insert(c.id, n);
    }
    for e in &p.pipes {
        g.add_edge(node_of[&e.a], node_of[&e.b]);
    }
    Ok(remove_identities(&g))
}
