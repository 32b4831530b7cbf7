use std::fmt::Write;

use super::{Color, CubeKind, PipeDiagram};

const CUBE_HALF: f64 = 0.3;
const PIPE_HALF: f64 = 0.15;

fn material(kind: CubeKind, color: Option<Color>) -> &'static str {
    match (kind, color) {
        (CubeKind::Standard, Some(Color::Blue)) => "z_junction",
        (CubeKind::Standard, _) => "x_junction",
        (CubeKind::Hadamard, _) => "hadamard",
        (CubeKind::YCap, _) => "y_cap",
        (CubeKind::InjectionPort, _) => "injection",
        (CubeKind::BoundaryPort, _) => "port",
    }
}

fn push_box(out: &mut String, nv: &mut usize, lo: [f64; 3], hi: [f64; 3]) {
    for i in 0..8 {
        let x = if i & 1 == 0 { lo[0] } else { hi[0] };
        let y = if i & 2 == 0 { lo[1] } else { hi[1] };
        let z = if i & 4 == 0 { lo[2] } else { hi[2] };
        let _ = writeln!(out, "v {x} {y} {z}");
    }
    const QUADS: [[usize; 4]; 6] = [
        [0, 2, 3, 1],
        [4, 5, 7, 6],
        [0, 1, 5, 4],
        [2, 6, 7, 3],
        [0, 4, 6, 2],
        [1, 3, 7, 5],
    ];
    for q in QUADS {
        let [a, b, c, d] = q.map(|k| *nv + k + 1);
        let _ = writeln!(out, "f {a} {b} {c}\nf {a} {c} {d}");
    }
    *nv += 8;
}

/// Wavefront OBJ triangle mesh: one box per cube, one thin prism per pipe,
/// grouped by material name.
pub fn to_obj(p: &PipeDiagram) -> String {
    let mut out = String::from("# pipe diagram\n");
    let mut nv = 0usize;
    for c in &p.cubes {
        let _ = writeln!(out, "g cube_{}\nusemtl {}", c.id, material(c.kind, c.color));
        let ctr = c.pos.map(f64::from);
        push_box(
            &mut out,
            &mut nv,
            ctr.map(|v| v - CUBE_HALF),
            ctr.map(|v| v + CUBE_HALF),
        );
    }
    let pos = p.index_of();
    for (k, e) in p.pipes.iter().enumerate() {
        let (Some(&ia), Some(&ib)) = (pos.get(&e.a), pos.get(&e.b)) else {
            continue;
        };
        let (a, b) = (
            p.cubes[ia].pos.map(f64::from),
            p.cubes[ib].pos.map(f64::from),
        );
        let mut lo = [0.0; 3];
        let mut hi = [0.0; 3];
        for i in 0..3 {
            if i == e.dir.index() {
                lo[i] = a[i].min(b[i]) + CUBE_HALF;
                hi[i] = a[i].max(b[i]) - CUBE_HALF;
            } else {
                lo[i] = a[i] - PIPE_HALF;
                hi[i] = a[i] + PIPE_HALF;
            }
        }
        let _ = writeln!(out, "g pipe_{k}\nusemtl pipe_blue_{}", e.blue);
        push_box(&mut out, &mut nv, lo, hi);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipe::{Axis, Cube};

    #[test]
    fn counts() {
        let mut p = PipeDiagram::new();
        let a = p.add_cube(Cube::standard(0, [0, 0, 0], Axis::X, Color::Blue));
        let b = p.add_cube(Cube::standard(0, [0, 0, 1], Axis::X, Color::Blue));
        p.connect(a, b, Axis::X);
        let obj = to_obj(&p);
        assert_eq!(obj.lines().filter(|l| l.starts_with("v ")).count(), 24);
        assert_eq!(obj.lines().filter(|l| l.starts_with("f ")).count(), 36);
    }
}
