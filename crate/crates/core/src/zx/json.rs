use serde::{Deserialize, Serialize};

use super::{NodeKind, ZxDiagram};
use crate::error::{Error, Result};

#[derive(Serialize, Deserialize)]
struct NodeDto {
    id: usize,
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    phase: Option<f64>,
}

#[derive(Serialize, Deserialize)]
struct DiagramDto {
    nodes: Vec<NodeDto>,
    edges: Vec<[usize; 2]>,
    inputs: Vec<usize>,
    outputs: Vec<usize>,
}

fn kind_name(k: NodeKind) -> &'static str {
    match k {
        NodeKind::Z => "z",
        NodeKind::X => "x",
        NodeKind::HBox => "h",
        NodeKind::Boundary => "boundary",
    }
}

pub fn diagram_to_json(g: &ZxDiagram) -> String {
    let g = g.compacted();
    let dto = DiagramDto {
        nodes: g
            .node_ids()
            .map(|v| NodeDto {
                id: v,
                kind: kind_name(g.kind(v)).to_string(),
                phase: g.kind(v).is_spider().then(|| g.phase(v)),
            })
            .collect(),
        edges: g.edges().into_iter().map(|(a, b)| [a, b]).collect(),
        inputs: g.inputs.clone(),
        outputs: g.outputs.clone(),
    };
    serde_json::to_string_pretty(&dto).expect("diagram serializes")
}

pub fn diagram_from_json(text: &str) -> Result<ZxDiagram> {
    let dto: DiagramDto = serde_json::from_str(text)?;
    let mut g = ZxDiagram::new();
    let mut map = std::collections::HashMap::new();
    for n in &dto.nodes {
        let kind = match n.kind.as_str() {
            "z" => NodeKind::Z,
            "x" => NodeKind::X,
            "h" => NodeKind::HBox,
            "boundary" => NodeKind::Boundary,
            other => return Err(Error::Json(format!("unknown node kind '{other}'"))),
        };
        if map
            .insert(n.id, g.add_node(kind, n.phase.unwrap_or(0.0)))
            .is_some()
        {
            return Err(Error::Json(format!("duplicate node id {}", n.id)));
        }
    }
    let look = |id: &usize| {
        map.get(id)
            .copied()
            .ok_or_else(|| Error::Json(format!("unknown node id {id}")))
    };
    for [a, b] in &dto.edges {
        let (a, b) = (look(a)?, look(b)?);
        if a == b {
            return Err(Error::Json(format!("self-loop on node {a}")));
        }
        g.add_edge(a, b);
    }
    g.inputs = dto.inputs.iter().map(look).collect::<Result<_>>()?;
    g.outputs = dto.outputs.iter().map(look).collect::<Result<_>>()?;
    g.check().map_err(Error::Json)?;
    Ok(g)
}
