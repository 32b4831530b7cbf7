use serde::{Deserialize, Serialize};

use super::{space_time_volume, Axis, Color, Cube, CubeKind, Pipe, PipeDiagram};
use crate::error::Result;

pub const PIPE_JSON_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct CubeDto {
    id: usize,
    pos: [i32; 3],
    kind: CubeKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    orientation: Option<Axis>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    color: Option<Color>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    angle: Option<f64>,
}

#[derive(Serialize, Deserialize)]
struct PipeDto {
    a: usize,
    b: usize,
    dir: Axis,
    blue: Axis,
    red: Axis,
}

#[derive(Serialize, Deserialize)]
struct Meta {
    volume: u64,
    time_steps: u64,
}

#[derive(Serialize, Deserialize)]
struct DiagramDto {
    version: u32,
    cubes: Vec<CubeDto>,
    pipes: Vec<PipeDto>,
    inputs: Vec<usize>,
    outputs: Vec<usize>,
    meta: Meta,
}

pub fn diagram_to_json(p: &PipeDiagram) -> String {
    let dto = DiagramDto {
        version: PIPE_JSON_VERSION,
        cubes: p
            .cubes
            .iter()
            .map(|c| CubeDto {
                id: c.id,
                pos: c.pos,
                kind: c.kind,
                orientation: c.orientation,
                color: c.color,
                angle: c.angle,
            })
            .collect(),
        pipes: p
            .pipes
            .iter()
            .map(|e| PipeDto {
                a: e.a,
                b: e.b,
                dir: e.dir,
                blue: e.blue,
                red: e.red,
            })
            .collect(),
        inputs: p.inputs.clone(),
        outputs: p.outputs.clone(),
        meta: Meta {
            volume: space_time_volume(p),
            time_steps: p.time_steps(),
        },
    };
    serde_json::to_string_pretty(&dto).expect("pipe diagram serializes")
}

/// Parse the JSON form. Structural checks are left to
/// [`validate_pipe_diagram`](super::validate_pipe_diagram).
pub fn diagram_from_json(text: &str) -> Result<PipeDiagram> {
    let dto: DiagramDto = serde_json::from_str(text)?;
    Ok(PipeDiagram {
        cubes: dto
            .cubes
            .into_iter()
            .map(|c| Cube {
                id: c.id,
                pos: c.pos,
                kind: c.kind,
                orientation: c.orientation,
                color: c.color,
                angle: c.angle,
            })
            .collect(),
        pipes: dto
            .pipes
            .into_iter()
            .map(|e| Pipe {
                a: e.a,
                b: e.b,
                dir: e.dir,
                blue: e.blue,
                red: e.red,
            })
            .collect(),
        inputs: dto.inputs,
        outputs: dto.outputs,
    })
}
