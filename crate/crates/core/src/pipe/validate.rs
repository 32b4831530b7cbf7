use std::collections::{HashMap, HashSet};
use std::fmt;

use super::{Axis, CubeKind, Dir, PipeDiagram};

#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    DuplicateCubeId { cube: usize },
    MissingAttributes { cube: usize },
    DanglingPipe { pipe: usize },
    FrameAxes { pipe: usize },
    NotAdjacent { pipe: usize },
    Direction { pipe: usize, cube: usize },
    Color { pipe: usize, cube: usize },
    Hadamard { cube: usize, reason: String },
    PortDegree { cube: usize, degree: usize },
    PortList { cube: usize },
    DuplicatePosition { a: usize, b: usize },
    DuplicatePipe { a: usize, b: usize },
    JunctionDegree { cube: usize, degree: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DuplicateCubeId { cube } => write!(f, "cube id {cube} used twice"),
            Violation::MissingAttributes { cube } => {
                write!(f, "cube {cube} has inconsistent attributes for its kind")
            }
            Violation::DanglingPipe { pipe } => write!(f, "pipe {pipe} references a missing cube"),
            Violation::FrameAxes { pipe } => {
                write!(f, "pipe {pipe} axes are not mutually orthogonal")
            }
            Violation::NotAdjacent { pipe } => write!(
                f,
                "pipe {pipe} endpoints are not one step apart along its direction"
            ),
            Violation::Direction { pipe, cube } => {
                write!(f, "pipe {pipe} runs along the orientation of cube {cube}")
            }
            Violation::Color { pipe, cube } => {
                write!(f, "pipe {pipe} colour disagrees with cube {cube}")
            }
            Violation::Hadamard { cube, reason } => write!(f, "hadamard cube {cube}: {reason}"),
            Violation::PortDegree { cube, degree } => {
                write!(f, "port cube {cube} has {degree} pipes, expected 1")
            }
            Violation::PortList { cube } => write!(
                f,
                "boundary port {cube} must appear in exactly one port list"
            ),
            Violation::DuplicatePosition { a, b } => {
                write!(f, "cubes {a} and {b} share a position")
            }
            Violation::DuplicatePipe { a, b } => {
                write!(f, "duplicate pipe between cubes {a} and {b}")
            }
            Violation::JunctionDegree { cube, degree } => {
                write!(f, "cube {cube} has {degree} pipes, at most 4 fit")
            }
        }
    }
}

/// Every structural violation of `p`; an empty list means the diagram is
/// valid.
pub fn validate_pipe_diagram(p: &PipeDiagram) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut index: HashMap<usize, usize> = HashMap::new();
    for (i, c) in p.cubes.iter().enumerate() {
        if index.insert(c.id, i).is_some() {
            out.push(Violation::DuplicateCubeId { cube: c.id });
        }
        let std_ok = c.orientation.is_some() && c.color.is_some();
        let attrs_ok = match c.kind {
            CubeKind::Standard => std_ok && c.angle.is_none(),
            CubeKind::InjectionPort => {
                c.orientation.is_none() && c.color.is_none() && c.angle.is_some_and(f64::is_finite)
            }
            _ => c.orientation.is_none() && c.color.is_none() && c.angle.is_none(),
        };
        if !attrs_ok {
            out.push(Violation::MissingAttributes { cube: c.id });
        }
    }

    let mut by_pos: HashMap<[i32; 3], usize> = HashMap::new();
    for c in &p.cubes {
        if let Some(&other) = by_pos.get(&c.pos) {
            out.push(Violation::DuplicatePosition { a: other, b: c.id });
        } else {
            by_pos.insert(c.pos, c.id);
        }
    }

    let mut incident: HashMap<usize, Vec<usize>> = HashMap::new();
    let mut seen = HashSet::new();
    for (k, e) in p.pipes.iter().enumerate() {
        let (Some(&ia), Some(&ib)) = (index.get(&e.a), index.get(&e.b)) else {
            out.push(Violation::DanglingPipe { pipe: k });
            continue;
        };
        if e.dir == e.blue || e.dir == e.red || e.blue == e.red {
            out.push(Violation::FrameAxes { pipe: k });
            continue;
        }
        let (pa, pb) = (p.cubes[ia].pos, p.cubes[ib].pos);
        match Dir::between(pa, pb) {
            Some(d) if d.axis == e.dir => {}
            _ => {
                out.push(Violation::NotAdjacent { pipe: k });
                continue;
            }
        }
        let key = if e.a < e.b { (e.a, e.b) } else { (e.b, e.a) };
        if !seen.insert(key) {
            out.push(Violation::DuplicatePipe { a: key.0, b: key.1 });
        }
        incident.entry(e.a).or_default().push(k);
        incident.entry(e.b).or_default().push(k);
    }

    for c in &p.cubes {
        let pipes = incident.get(&c.id).map(Vec::as_slice).unwrap_or(&[]);
        match c.kind {
            CubeKind::Standard => {
                let (Some(o), Some(color)) = (c.orientation, c.color) else {
                    continue;
                };
                if pipes.len() > 4 {
                    out.push(Violation::JunctionDegree {
                        cube: c.id,
                        degree: pipes.len(),
                    });
                }
                for &k in pipes {
                    let e = &p.pipes[k];
                    if e.dir == o {
                        out.push(Violation::Direction {
                            pipe: k,
                            cube: c.id,
                        });
                    } else if e.color_along(o) != Some(color) {
                        out.push(Violation::Color {
                            pipe: k,
                            cube: c.id,
                        });
                    }
                }
            }
            CubeKind::Hadamard => {
                if pipes.len() != 2 {
                    out.push(Violation::Hadamard {
                        cube: c.id,
                        reason: format!("{} incident pipes, expected exactly 2", pipes.len()),
                    });
                    continue;
                }
                let (e1, e2) = (&p.pipes[pipes[0]], &p.pipes[pipes[1]]);
                let ok = if e1.dir == e2.dir {
                    e1.blue == e2.red
                } else {
                    let n = Axis::third(e1.dir, e2.dir);
                    e1.color_along(n) != e2.color_along(n)
                };
                if !ok {
                    out.push(Violation::Hadamard {
                        cube: c.id,
                        reason: "colours do not swap".into(),
                    });
                }
            }
            _ => {
                if pipes.len() != 1 {
                    out.push(Violation::PortDegree {
                        cube: c.id,
                        degree: pipes.len(),
                    });
                }
            }
        }
    }

    let listed: Vec<usize> = p.inputs.iter().chain(&p.outputs).copied().collect();
    for c in &p.cubes {
        let hits = listed.iter().filter(|&&x| x == c.id).count();
        if (c.kind == CubeKind::BoundaryPort) != (hits == 1) {
            out.push(Violation::PortList { cube: c.id });
        }
    }
    for id in listed {
        if !index.contains_key(&id) {
            out.push(Violation::PortList { cube: id });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipe::{Color, Cube, Pipe};

    /// A straight run: port, identity, port.
    fn column() -> PipeDiagram {
        let mut p = PipeDiagram::new();
        let a = p.add_cube(Cube::plain(0, [0, 0, 0], CubeKind::BoundaryPort));
        let m = p.add_cube(Cube::standard(0, [0, 0, 1], Axis::X, Color::Blue));
        let b = p.add_cube(Cube::plain(0, [0, 0, 2], CubeKind::BoundaryPort));
        p.connect(a, m, Axis::X);
        p.connect(m, b, Axis::X);
        p.inputs = vec![a];
        p.outputs = vec![b];
        p
    }

    #[test]
    fn column_is_valid() {
        assert!(validate_pipe_diagram(&column()).is_empty());
    }

    #[test]
    fn pipe_along_orientation() {
        let mut p = column();
        p.cubes[1].orientation = Some(Axis::Z);
        let v = validate_pipe_diagram(&p);
        assert!(
            v.iter().any(|x| matches!(x, Violation::Direction { .. })),
            "{v:?}"
        );
    }

    #[test]
    fn colour_mismatch() {
        let mut p = column();
        p.cubes[1].color = Some(Color::Red);
        let v = validate_pipe_diagram(&p);
        assert_eq!(v.len(), 2);
        assert!(v.iter().all(|x| matches!(x, Violation::Color { .. })));
    }

    #[test]
    fn hadamard_needs_two_pipes() {
        let mut p = PipeDiagram::new();
        let h = p.add_cube(Cube::plain(0, [0, 0, 0], CubeKind::Hadamard));
        for d in [[1, 0, 0], [-1, 0, 0], [0, 1, 0]] {
            let c = p.add_cube(Cube::plain(0, d, CubeKind::YCap));
            p.connect(h, c, Axis::Z);
        }
        let v = validate_pipe_diagram(&p);
        assert!(
            v.iter().any(|x| matches!(x, Violation::Hadamard { .. })),
            "{v:?}"
        );
    }

    #[test]
    fn hadamard_swaps_colours() {
        let mut p = PipeDiagram::new();
        let a = p.add_cube(Cube::plain(0, [0, 0, 0], CubeKind::BoundaryPort));
        let h = p.add_cube(Cube::plain(0, [0, 0, 1], CubeKind::Hadamard));
        let b = p.add_cube(Cube::plain(0, [0, 0, 2], CubeKind::BoundaryPort));
        p.connect(a, h, Axis::X);
        p.connect(h, b, Axis::Y);
        p.inputs = vec![a];
        p.outputs = vec![b];
        assert!(validate_pipe_diagram(&p).is_empty());
        p.pipes[1] = Pipe::with_blue(h, b, Axis::Z, Axis::X);
        assert_eq!(validate_pipe_diagram(&p).len(), 1);
    }

    #[test]
    fn geometry_checks() {
        let mut p = column();
        p.cubes[2].pos = [0, 0, 1];
        let v = validate_pipe_diagram(&p);
        assert!(v
            .iter()
            .any(|x| matches!(x, Violation::DuplicatePosition { .. })));
        let mut p = column();
        let e = p.pipes[0];
        p.pipes.push(e);
        let v = validate_pipe_diagram(&p);
        assert!(v
            .iter()
            .any(|x| matches!(x, Violation::DuplicatePipe { .. })));
        let mut p = column();
        p.outputs.clear();
        let v = validate_pipe_diagram(&p);
        assert!(v.iter().any(|x| matches!(x, Violation::PortList { .. })));
    }
}
