//! End-to-end semantic checks and a state-vector model of phase injection.

use num_complex::Complex64;

use crate::circuit::Circuit;
use crate::error::{Error, Result};
use crate::pipe::{interpret_pipe_as_zx, PipeDiagram};
use crate::zx::{circuit_to_zx, equivalent_up_to_scalar, evaluate_tensor};

const NORM_TOL: f64 = 1e-10;

/// Compare the linear map of `c` with the map realised by `p`, up to a
/// nonzero scalar.
pub fn check_semantic_equivalence(c: &Circuit, p: &PipeDiagram, tol: f64) -> Result<bool> {
    let want = evaluate_tensor(&circuit_to_zx(c))?;
    let got = evaluate_tensor(&interpret_pipe_as_zx(p)?)?;
    if (want.rows, want.cols) != (got.rows, got.cols) {
        return Ok(false);
    }
    equivalent_up_to_scalar(&want, &got, tol)
}

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    pub amplitudes: Vec<Complex64>,
}

impl StateVector {
    pub fn norm(&self) -> f64 {
        self.amplitudes
            .iter()
            .map(|a| a.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    fn normalize(&mut self) -> Result<()> {
        let n = self.norm();
        if n < NORM_TOL {
            return Err(Error::InvalidState(
                "projection onto a zero-probability outcome".into(),
            ));
        }
        for a in &mut self.amplitudes {
            *a /= n;
        }
        Ok(())
    }

    fn check_normalized(&self) -> Result<()> {
        if (self.norm() - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidState(format!(
                "norm {} after protocol step",
                self.norm()
            )));
        }
        Ok(())
    }
}

/// |⟨a|b⟩|² for two single-qubit states.
pub fn fidelity(a: [Complex64; 2], b: [Complex64; 2]) -> f64 {
    (a[0].conj() * b[0] + a[1].conj() * b[1]).norm_sqr()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum XOutcome {
    Plus,
    Minus,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Byproduct {
    pub x: bool,
    pub z: bool,
}

impl Byproduct {
    /// Undo the Pauli frame, X first and then Z.
    pub fn correct(self, s: [Complex64; 2]) -> [Complex64; 2] {
        let s = if self.x { [s[1], s[0]] } else { s };
        if self.z {
            [s[0], -s[1]]
        } else {
            s
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct InjectionResult {
    pub state: [Complex64; 2],
    pub byproduct: Byproduct,
}

/// Simulate injecting `diag(1, e^{iθ})` into a data qubit through a joint
/// ZZ measurement with a |+⟩ ancilla followed by an X measurement of the
/// ancilla. Both outcomes are forced. With `input_x` the data qubit is
/// taken to carry a pending X, so the injected angle is negated once more
/// and the X survives as an output byproduct.
pub fn simulate_rz_injection(
    alpha: Complex64,
    beta: Complex64,
    theta: f64,
    zz_outcome: u8,
    x_outcome: XOutcome,
    input_x: bool,
) -> Result<InjectionResult> {
    if zz_outcome > 1 {
        return Err(Error::InvalidState(format!(
            "ZZ outcome must be 0 or 1, got {zz_outcome}"
        )));
    }
    if ((alpha.norm_sqr() + beta.norm_sqr()) - 1.0).abs() > NORM_TOL {
        return Err(Error::InvalidState(
            "input amplitudes are not normalized".into(),
        ));
    }
    let (d0, d1) = if input_x {
        (beta, alpha)
    } else {
        (alpha, beta)
    };
    // index = data + 2·ancilla
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut psi = StateVector {
        amplitudes: vec![d0 * h, d1 * h, d0 * h, d1 * h],
    };
    psi.check_normalized()?;

    for (i, a) in psi.amplitudes.iter_mut().enumerate() {
        let parity = ((i & 1) ^ (i >> 1)) as u8;
        if parity != zz_outcome {
            *a = Complex64::new(0.0, 0.0);
        }
    }
    psi.normalize()?;

    let flip = (zz_outcome == 1) != input_x;
    let phi = if flip { -theta } else { theta };
    let rot = Complex64::from_polar(1.0, phi);
    psi.amplitudes[2] *= rot;
    psi.amplitudes[3] *= rot;
    psi.check_normalized()?;

    let sign = if x_outcome == XOutcome::Plus {
        1.0
    } else {
        -1.0
    };
    let a = &psi.amplitudes;
    let mut data = StateVector {
        amplitudes: vec![(a[0] + a[2] * sign) * h, (a[1] + a[3] * sign) * h],
    };
    data.normalize()?;
    data.check_normalized()?;

    Ok(InjectionResult {
        state: [data.amplitudes[0], data.amplitudes[1]],
        byproduct: Byproduct {
            x: input_x,
            z: x_outcome == XOutcome::Minus,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::Gate;
    use crate::pipe::{Axis, Color, Cube, CubeKind};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn target(alpha: Complex64, beta: Complex64, theta: f64) -> [Complex64; 2] {
        [alpha, Complex64::from_polar(1.0, theta) * beta]
    }

    #[test]
    fn even_plus_branch_needs_no_correction() {
        let (a, b) = (c(0.6, 0.0), c(0.0, 0.8));
        let r = simulate_rz_injection(a, b, 0.7, 0, XOutcome::Plus, false).unwrap();
        assert_eq!(r.byproduct, Byproduct::default());
        assert!((fidelity(r.state, target(a, b, 0.7)) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn odd_minus_branch_reports_z() {
        let (a, b) = (c(0.6, 0.0), c(0.0, 0.8));
        let r = simulate_rz_injection(a, b, 1.1, 1, XOutcome::Minus, false).unwrap();
        assert!(r.byproduct.z && !r.byproduct.x);
        assert!(fidelity(r.state, target(a, b, 1.1)) < 1.0 - 1e-3);
        assert!((fidelity(r.byproduct.correct(r.state), target(a, b, 1.1)) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_angle_leaves_state() {
        let (a, b) = (c(0.28, 0.96), c(0.0, 0.0));
        for zz in 0..2 {
            for x in [XOutcome::Plus, XOutcome::Minus] {
                let r = simulate_rz_injection(a, b, 0.0, zz, x, false).unwrap();
                assert!((fidelity(r.byproduct.correct(r.state), [a, b]) - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn all_branches_random_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let v: [f64; 4] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            let (a, b) = (c(v[0] / n, v[1] / n), c(v[2] / n, v[3] / n));
            let theta = rng.gen_range(-PI..PI);
            for input_x in [false, true] {
                for zz in 0..2 {
                    for x in [XOutcome::Plus, XOutcome::Minus] {
                        let r = simulate_rz_injection(a, b, theta, zz, x, input_x).unwrap();
                        assert_eq!(r.byproduct.x, input_x);
                        let f = fidelity(r.byproduct.correct(r.state), target(a, b, theta));
                        assert!(f >= 1.0 - 1e-10, "fidelity {f}");
                    }
                }
            }
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(
            simulate_rz_injection(c(1.0, 0.0), c(1.0, 0.0), 0.3, 0, XOutcome::Plus, false).is_err()
        );
        assert!(
            simulate_rz_injection(c(1.0, 0.0), c(0.0, 0.0), 0.3, 2, XOutcome::Plus, false).is_err()
        );
    }

    /// Z(0) control at x=0 and X(0) target at x=1, joined through a detour
    /// one row over, with ports above and below each patch.
    fn cnot_pipe() -> PipeDiagram {
        let mut p = PipeDiagram::new();
        let port =
            |p: &mut PipeDiagram, pos| p.add_cube(Cube::plain(0, pos, CubeKind::BoundaryPort));
        let i0 = port(&mut p, [0, 0, 0]);
        let i1 = port(&mut p, [1, 0, 0]);
        let ctl = p.add_cube(Cube::standard(0, [0, 0, 2], Axis::X, Color::Blue));
        let tgt = p.add_cube(Cube::standard(0, [1, 0, 1], Axis::X, Color::Red));
        let w0 = p.add_cube(Cube::standard(0, [0, 0, 1], Axis::X, Color::Blue));
        let w1 = p.add_cube(Cube::standard(0, [1, 0, 2], Axis::X, Color::Red));
        let r0 = p.add_cube(Cube::standard(0, [0, 1, 2], Axis::Z, Color::Red));
        let r1 = p.add_cube(Cube::standard(0, [1, 1, 2], Axis::Y, Color::Blue));
        let r2 = p.add_cube(Cube::standard(0, [1, 1, 1], Axis::X, Color::Red));
        let o0 = port(&mut p, [0, 0, 3]);
        let o1 = port(&mut p, [1, 0, 3]);
        p.connect(i0, w0, Axis::X);
        p.connect(w0, ctl, Axis::X);
        p.connect(ctl, o0, Axis::X);
        p.connect(i1, tgt, Axis::Y);
        p.connect(tgt, w1, Axis::Y);
        p.connect(w1, o1, Axis::Y);
        p.connect(ctl, r0, Axis::X);
        p.connect(r0, r1, Axis::Y);
        p.connect(r1, r2, Axis::Y);
        p.connect(r2, tgt, Axis::Z);
        p.inputs = vec![i0, i1];
        p.outputs = vec![o0, o1];
        p
    }

    #[test]
    fn cnot_pipe_matches_cnot() {
        let p = cnot_pipe();
        let v = crate::pipe::validate_pipe_diagram(&p);
        assert!(v.is_empty(), "{v:?}");
        let cx = Circuit::with_gates(2, vec![Gate::cnot(0, 1)]).unwrap();
        assert!(check_semantic_equivalence(&cx, &p, 1e-9).unwrap());
        let xc = Circuit::with_gates(2, vec![Gate::cnot(1, 0)]).unwrap();
        assert!(!check_semantic_equivalence(&xc, &p, 1e-9).unwrap());
    }

    #[test]
    fn swap_pipe_is_not_cnot() {
        let mut p = PipeDiagram::new();
        let mut ports = Vec::new();
        for x in 0..2 {
            let a = p.add_cube(Cube::plain(0, [x, 0, 0], CubeKind::BoundaryPort));
            let m = p.add_cube(Cube::standard(0, [x, 0, 1], Axis::X, Color::Blue));
            let b = p.add_cube(Cube::plain(0, [x, 0, 2], CubeKind::BoundaryPort));
            p.connect(a, m, Axis::X);
            p.connect(m, b, Axis::X);
            ports.push((a, b));
        }
        p.inputs = vec![ports[0].0, ports[1].0];
        p.outputs = vec![ports[1].1, ports[0].1];
        assert!(crate::pipe::validate_pipe_diagram(&p).is_empty());
        let cx = Circuit::with_gates(2, vec![Gate::cnot(0, 1)]).unwrap();
        assert!(!check_semantic_equivalence(&cx, &p, 1e-9).unwrap());
        let swap = Circuit::with_gates(
            2,
            vec![Gate::cnot(0, 1), Gate::cnot(1, 0), Gate::cnot(0, 1)],
        )
        .unwrap();
        assert!(check_semantic_equivalence(&swap, &p, 1e-9).unwrap());
    }
}
