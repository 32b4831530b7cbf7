//! Space-time pipe diagrams: cubes on an integer lattice joined by unit
//! pipes, with z as the time axis.

mod interpret;
mod json;
mod mesh;
mod validate;

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

pub use interpret::interpret_pipe_as_zx;
pub use json::{diagram_from_json, diagram_to_json, PIPE_JSON_VERSION};
pub use mesh::to_obj;
pub use validate::{validate_pipe_diagram, Violation};

pub type Pos = [i32; 3];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Axis {
        Axis::ALL[i]
    }

    /// The axis orthogonal to two distinct axes.
    pub fn third(a: Axis, b: Axis) -> Axis {
        debug_assert!(a != b);
        Axis::from_index(3 - a.index() - b.index())
    }

    pub fn unit(self) -> Pos {
        let mut v = [0; 3];
        v[self.index()] = 1;
        v
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        })
    }
}

/// Signed unit direction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Dir {
    pub axis: Axis,
    pub positive: bool,
}

impl Dir {
    pub const PZ: Dir = Dir {
        axis: Axis::Z,
        positive: true,
    };
    pub const NZ: Dir = Dir {
        axis: Axis::Z,
        positive: false,
    };
    /// Fixed scan order: up first, then the horizontal directions, down last.
    pub const ORDER: [Dir; 6] = [
        Dir::PZ,
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
        Dir::NZ,
    ];

    pub fn index(self) -> usize {
        self.axis.index() * 2 + usize::from(!self.positive)
    }

    pub fn from_index(i: usize) -> Dir {
        Dir {
            axis: Axis::from_index(i / 2),
            positive: i.is_multiple_of(2),
        }
    }

    pub fn rev(self) -> Dir {
        Dir {
            axis: self.axis,
            positive: !self.positive,
        }
    }

    pub fn step(self, p: Pos) -> Pos {
        let mut q = p;
        q[self.axis.index()] += if self.positive { 1 } else { -1 };
        q
    }

    /// Direction from `a` to the face-adjacent cell `b`.
    pub fn between(a: Pos, b: Pos) -> Option<Dir> {
        let d = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
        let nz: Vec<usize> = (0..3).filter(|&i| d[i] != 0).collect();
        if nz.len() != 1 || d[nz[0]].abs() != 1 {
            return None;
        }
        Some(Dir {
            axis: Axis::from_index(nz[0]),
            positive: d[nz[0]] > 0,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Color {
    Blue,
    Red,
}

impl Color {
    pub fn flip(self) -> Color {
        match self {
            Color::Blue => Color::Red,
            Color::Red => Color::Blue,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CubeKind {
    Standard,
    Hadamard,
    YCap,
    InjectionPort,
    BoundaryPort,
}

impl CubeKind {
    /// Kinds that terminate exactly one pipe.
    pub fn is_port(self) -> bool {
        matches!(
            self,
            CubeKind::YCap | CubeKind::InjectionPort | CubeKind::BoundaryPort
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Cube {
    pub id: usize,
    pub pos: Pos,
    pub kind: CubeKind,
    pub orientation: Option<Axis>,
    pub color: Option<Color>,
    pub angle: Option<f64>,
}

impl Cube {
    pub fn standard(id: usize, pos: Pos, orientation: Axis, color: Color) -> Cube {
        Cube {
            id,
            pos,
            kind: CubeKind::Standard,
            orientation: Some(orientation),
            color: Some(color),
            angle: None,
        }
    }

    pub fn plain(id: usize, pos: Pos, kind: CubeKind) -> Cube {
        Cube {
            id,
            pos,
            kind,
            orientation: None,
            color: None,
            angle: None,
        }
    }

    pub fn injection(id: usize, pos: Pos, angle: f64) -> Cube {
        Cube {
            angle: Some(angle),
            ..Cube::plain(id, pos, CubeKind::InjectionPort)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Pipe {
    pub a: usize,
    pub b: usize,
    pub dir: Axis,
    pub blue: Axis,
    pub red: Axis,
}

impl Pipe {
    /// Colour of the pipe's boundary facing `axis`.
    pub fn color_along(&self, axis: Axis) -> Option<Color> {
        if axis == self.blue {
            Some(Color::Blue)
        } else if axis == self.red {
            Some(Color::Red)
        } else {
            None
        }
    }

    /// Pipe whose frame has blue boundaries along `blue`.
    pub fn with_blue(a: usize, b: usize, dir: Axis, blue: Axis) -> Pipe {
        Pipe {
            a,
            b,
            dir,
            blue,
            red: Axis::third(dir, blue),
        }
    }

    pub fn other(&self, id: usize) -> usize {
        if self.a == id {
            self.b
        } else {
            self.a
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct PipeDiagram {
    pub cubes: Vec<Cube>,
    pub pipes: Vec<Pipe>,
    pub inputs: Vec<usize>,
    pub outputs: Vec<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BoundingBox {
    pub min: Pos,
    pub max: Pos,
}

impl BoundingBox {
    pub fn of<'a>(points: impl IntoIterator<Item = &'a Pos>) -> Option<BoundingBox> {
        let mut it = points.into_iter();
        let first = *it.next()?;
        let mut bb = BoundingBox {
            min: first,
            max: first,
        };
        for p in it {
            for i in 0..3 {
                bb.min[i] = bb.min[i].min(p[i]);
                bb.max[i] = bb.max[i].max(p[i]);
            }
        }
        Some(bb)
    }

    pub fn extent(&self) -> [u64; 3] {
        [0, 1, 2].map(|i| (self.max[i] - self.min[i] + 1) as u64)
    }

    pub fn volume(&self) -> u64 {
        self.extent().iter().product()
    }
}

impl PipeDiagram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_cube(&mut self, mut cube: Cube) -> usize {
        cube.id = self.cubes.len();
        self.cubes.push(cube);
        self.cubes.len() - 1
    }

    /// Add a pipe between face-adjacent cubes with blue boundaries along
    /// `blue`, canonicalizing so that `b` sits in the positive direction.
    pub fn connect(&mut self, a: usize, b: usize, blue: Axis) -> usize {
        let d = Dir::between(self.cubes[a].pos, self.cubes[b].pos).expect("cubes are not adjacent");
        let (a, b) = if d.positive { (a, b) } else { (b, a) };
        self.pipes.push(Pipe::with_blue(a, b, d.axis, blue));
        self.pipes.len() - 1
    }

    pub fn index_of(&self) -> HashMap<usize, usize> {
        self.cubes
            .iter()
            .enumerate()
            .map(|(i, c)| (c.id, i))
            .collect()
    }

    pub fn degree(&self, id: usize) -> usize {
        self.pipes.iter().filter(|p| p.a == id || p.b == id).count()
    }

    /// Bounding box of every cube except boundary ports.
    pub fn bounding_box(&self) -> Option<BoundingBox> {
        BoundingBox::of(
            self.cubes
                .iter()
                .filter(|c| c.kind != CubeKind::BoundaryPort)
                .map(|c| &c.pos),
        )
    }

    /// Number of time steps spanned by all cubes, ports included.
    pub fn time_steps(&self) -> u64 {
        BoundingBox::of(self.cubes.iter().map(|c| &c.pos)).map_or(0, |b| b.extent()[2])
    }

    pub fn count_kind(&self, kind: CubeKind) -> usize {
        self.cubes.iter().filter(|c| c.kind == kind).count()
    }

    pub fn translated(&self, by: Pos) -> PipeDiagram {
        let mut p = self.clone();
        for c in &mut p.cubes {
            for i in 0..3 {
                c.pos[i] += by[i];
            }
        }
        p
    }
}

/// Bounding-box volume of the computational cubes; boundary ports are
/// excluded.
pub fn space_time_volume(p: &PipeDiagram) -> u64 {
    p.bounding_box().map_or(0, |b| b.volume())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_helpers() {
        assert_eq!(Axis::third(Axis::X, Axis::Z), Axis::Y);
        for i in 0..6 {
            assert_eq!(Dir::from_index(i).index(), i);
            let d = Dir::from_index(i);
            assert_eq!(Dir::between([0, 0, 0], d.step([0, 0, 0])), Some(d));
        }
        assert_eq!(Dir::between([0, 0, 0], [1, 1, 0]), None);
    }

    #[test]
    fn volumes() {
        let mut p = PipeDiagram::new();
        assert_eq!(space_time_volume(&p), 0);
        p.add_cube(Cube::standard(0, [0, 0, 0], Axis::X, Color::Blue));
        assert_eq!(space_time_volume(&p), 1);
        p.add_cube(Cube::standard(0, [2, 1, 3], Axis::X, Color::Blue));
        assert_eq!(space_time_volume(&p), 24);
        p.add_cube(Cube::plain(0, [9, 9, 9], CubeKind::BoundaryPort));
        assert_eq!(space_time_volume(&p), 24);
        assert_eq!(p.time_steps(), 10);
    }

    proptest::proptest! {
        #[test]
        fn volume_is_translation_invariant(
            pts in proptest::collection::vec((-5i32..5, -5i32..5, -5i32..5), 1..12),
            dx in -20i32..20, dy in -20i32..20, dz in -20i32..20,
        ) {
            let mut p = PipeDiagram::new();
            for (x, y, z) in pts {
                p.add_cube(Cube::standard(0, [x, y, z], Axis::X, Color::Red));
            }
            proptest::prop_assert_eq!(space_time_volume(&p), space_time_volume(&p.translated([dx, dy, dz])));
        }
    }
}
