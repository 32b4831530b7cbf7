use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;

use super::{NodeKind, ZxDiagram};
use crate::error::{Error, Result};

/// Open-wire limit for [`evaluate_tensor`].
pub const MAX_OPEN_WIRES: usize = 20;
const MAX_INTERMEDIATE_RANK: usize = 26;

/// Dense matrix; rows index outputs and columns inputs, with wire 0 as the
/// most significant bit.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearMap {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<Complex64>,
}

impl LinearMap {
    pub fn new(rows: usize, cols: usize, data: Vec<Complex64>) -> Self {
        assert_eq!(data.len(), rows * cols);
        assert!(rows.is_power_of_two() && cols.is_power_of_two());
        LinearMap { rows, cols, data }
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![Complex64::new(0.0, 0.0); n * n];
        for i in 0..n {
            data[i * n + i] = Complex64::new(1.0, 0.0);
        }
        LinearMap::new(n, n, data)
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.data[r * self.cols + c]
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn scale(&self, s: Complex64) -> LinearMap {
        LinearMap {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }
}

struct Tensor {
    labels: Vec<usize>,
    data: Vec<Complex64>,
}

impl Tensor {
    fn rank(&self) -> usize {
        self.labels.len()
    }

    /// Reorder axes so that `order` (a permutation of `labels`) becomes the
    /// new label list.
    fn permuted(&self, order: &[usize]) -> Tensor {
        if order == self.labels.as_slice() {
            return Tensor {
                labels: self.labels.clone(),
                data: self.data.clone(),
            };
        }
        let r = self.rank();
        // shift[i] = bit position in the old index of new axis i
        let shift: Vec<usize> = order
            .iter()
            .map(|l| r - 1 - self.labels.iter().position(|x| x == l).expect("label"))
            .collect();
        let mut data = vec![Complex64::new(0.0, 0.0); self.data.len()];
        for (new_idx, slot) in data.iter_mut().enumerate() {
            let mut old = 0usize;
            for (i, &s) in shift.iter().enumerate() {
                if (new_idx >> (r - 1 - i)) & 1 == 1 {
                    old |= 1 << s;
                }
            }
            *slot = self.data[old];
        }
        Tensor {
            labels: order.to_vec(),
            data,
        }
    }

    fn contract(&self, other: &Tensor) -> Tensor {
        let shared: Vec<usize> = self
            .labels
            .iter()
            .copied()
            .filter(|l| other.labels.contains(l))
            .collect();
        let fa: Vec<usize> = self
            .labels
            .iter()
            .copied()
            .filter(|l| !shared.contains(l))
            .collect();
        let fb: Vec<usize> = other
            .labels
            .iter()
            .copied()
            .filter(|l| !shared.contains(l))
            .collect();
        let a = self.permuted(&[fa.as_slice(), shared.as_slice()].concat());
        let b = other.permuted(&[shared.as_slice(), fb.as_slice()].concat());
        let (na, ns, nb) = (
            1usize << fa.len(),
            1usize << shared.len(),
            1usize << fb.len(),
        );
        let mut data = vec![Complex64::new(0.0, 0.0); na * nb];
        for i in 0..na {
            for s in 0..ns {
                let x = a.data[i * ns + s];
                if x.norm_sqr() == 0.0 {
                    continue;
                }
                let row = &b.data[s * nb..(s + 1) * nb];
                let out = &mut data[i * nb..(i + 1) * nb];
                for (o, y) in out.iter_mut().zip(row) {
                    *o += x * y;
                }
            }
        }
        Tensor {
            labels: [fa, fb].concat(),
            data,
        }
    }
}

fn spider_tensor(kind: NodeKind, phase: f64, labels: Vec<usize>) -> Tensor {
    let k = labels.len();
    let size = 1usize << k;
    let e = Complex64::from_polar(1.0, phase);
    let one = Complex64::new(1.0, 0.0);
    let data = match kind {
        NodeKind::Z => {
            let mut d = vec![Complex64::new(0.0, 0.0); size];
            d[0] += one;
            d[size - 1] += e;
            d
        }
        NodeKind::X => {
            let norm = FRAC_1_SQRT_2.powi(k as i32);
            (0..size)
                .map(|b| {
                    let sign = if (b as u64).count_ones().is_multiple_of(2) {
                        1.0
                    } else {
                        -1.0
                    };
                    (one + e * sign) * norm
                })
                .collect()
        }
        NodeKind::HBox => {
            let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
            vec![h, h, h, -h]
        }
        NodeKind::Boundary => vec![one, Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), one],
    };
    Tensor { labels, data }
}

/// Contract the diagram to the linear map from inputs to outputs.
pub fn evaluate_tensor(g: &ZxDiagram) -> Result<LinearMap> {
    let (n, m) = (g.inputs.len(), g.outputs.len());
    if n + m > MAX_OPEN_WIRES {
        return Err(Error::TensorTooLarge(n + m, MAX_OPEN_WIRES));
    }
    let edges = g.edges();
    let mut incident: Vec<Vec<usize>> = vec![Vec::new(); g.capacity()];
    for (i, &(a, b)) in edges.iter().enumerate() {
        incident[a].push(i);
        incident[b].push(i);
    }
    let open_label = |pos: usize| edges.len() + pos;
    let ports: Vec<usize> = g.outputs.iter().chain(&g.inputs).copied().collect();

    let mut tensors: Vec<Tensor> = Vec::new();
    for v in g.node_ids() {
        let node = g.node(v);
        let mut labels = incident[v].clone();
        if node.kind == NodeKind::Boundary {
            let pos = ports
                .iter()
                .position(|&p| p == v)
                .expect("boundary not listed as port");
            if labels.len() != 1 {
                return Err(Error::InvalidState(format!(
                    "boundary {v} has degree {}",
                    labels.len()
                )));
            }
            labels.push(open_label(pos));
        } else if node.kind == NodeKind::HBox && labels.len() != 2 {
            return Err(Error::InvalidState(format!(
                "hadamard box {v} has degree {}",
                labels.len()
            )));
        }
        tensors.push(spider_tensor(node.kind, node.phase, labels));
    }

    while tensors.len() > 1 {
        let mut best: Option<(usize, usize, usize)> = None;
        for i in 0..tensors.len() {
            for j in i + 1..tensors.len() {
                let shared = tensors[i]
                    .labels
                    .iter()
                    .filter(|l| tensors[j].labels.contains(l))
                    .count();
                if shared == 0 {
                    continue;
                }
                let r = tensors[i].rank() + tensors[j].rank() - 2 * shared;
                if best.is_none_or(|(br, _, _)| r < br) {
                    best = Some((r, i, j));
                }
            }
        }
        let (i, j) = match best {
            Some((_, i, j)) => (i, j),
            None => {
                // disconnected pieces: outer product of the two smallest
                let mut idx: Vec<usize> = (0..tensors.len()).collect();
                idx.sort_by_key(|&k| (tensors[k].rank(), k));
                (idx[0].min(idx[1]), idx[0].max(idx[1]))
            }
        };
        let b = tensors.swap_remove(j);
        let a = tensors.swap_remove(i);
        let c = a.contract(&b);
        if c.rank() > MAX_INTERMEDIATE_RANK {
            return Err(Error::TensorTooLarge(c.rank(), MAX_INTERMEDIATE_RANK));
        }
        tensors.push(c);
    }
    let t = tensors.pop().unwrap_or(Tensor {
        labels: Vec::new(),
        data: vec![Complex64::new(1.0, 0.0)],
    });
    let order: Vec<usize> = (0..ports.len()).map(open_label).collect();
    let t = t.permuted(&order);
    Ok(LinearMap::new(1 << m, 1 << n, t.data))
}

/// Proportionality test with a nonzero scalar. Both maps are first scaled to
/// unit max-norm; the scalar is read off the largest-magnitude entry.
/// Maps whose max-norm is at most `tol` count as zero.
pub fn equivalent_up_to_scalar(a: &LinearMap, b: &LinearMap, tol: f64) -> Result<bool> {
    if (a.rows, a.cols) != (b.rows, b.cols) {
        return Err(Error::DimensionMismatch((a.rows, a.cols), (b.rows, b.cols)));
    }
    let (na, nb) = (a.max_abs(), b.max_abs());
    if na <= tol || nb <= tol {
        return Ok(na <= tol && nb <= tol);
    }
    let k = (0..b.data.len())
        .max_by(|&i, &j| b.data[i].norm().total_cmp(&b.data[j].norm()))
        .expect("non-empty map");
    let lambda = (a.data[k] / na) / (b.data[k] / nb);
    if lambda.norm() == 0.0 {
        return Ok(false);
    }
    let worst = a
        .data
        .iter()
        .zip(&b.data)
        .map(|(x, y)| (x / na - lambda * y / nb).norm())
        .fold(0.0, f64::max);
    Ok(worst <= tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{Circuit, Gate};
    use crate::zx::circuit_to_zx;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn rounding_noise_counts_as_zero() {
        let a = LinearMap::new(1, 1, vec![c(0.0)]);
        let b = LinearMap::new(1, 1, vec![Complex64::new(-5.6e-17, 2.2e-16)]);
        assert!(equivalent_up_to_scalar(&a, &b, 1e-9).unwrap());
        assert!(!equivalent_up_to_scalar(&a, &LinearMap::new(1, 1, vec![c(1.0)]), 1e-9).unwrap());
    }

    fn close(a: &LinearMap, b: &LinearMap) -> bool {
        a.data
            .iter()
            .zip(&b.data)
            .all(|(x, y)| (x - y).norm() < 1e-12)
    }

    #[test]
    fn identity_spider() {
        let mut g = ZxDiagram::new();
        let i = g.add_input();
        let s = g.add_spider(NodeKind::Z, 0.0);
        let o = g.add_output();
        g.add_edge(i, s);
        g.add_edge(s, o);
        assert!(close(
            &evaluate_tensor(&g).unwrap(),
            &LinearMap::identity(2)
        ));
    }

    #[test]
    fn hadamard_box() {
        let mut g = ZxDiagram::new();
        let i = g.add_input();
        let h = g.add_node(NodeKind::HBox, 0.0);
        let o = g.add_output();
        g.add_edge(i, h);
        g.add_edge(h, o);
        let r = FRAC_1_SQRT_2;
        let want = LinearMap::new(2, 2, vec![c(r), c(r), c(r), c(-r)]);
        assert!(close(&evaluate_tensor(&g).unwrap(), &want));
    }

    #[test]
    fn cnot_is_proportional_to_permutation() {
        let circ = Circuit::with_gates(2, vec![Gate::cnot(0, 1)]).unwrap();
        let got = evaluate_tensor(&circuit_to_zx(&circ)).unwrap();
        let mut want = vec![c(0.0); 16];
        // |c t> -> |c, t xor c>, qubit 0 most significant
        for (col, row) in [(0, 0), (1, 1), (2, 3), (3, 2)] {
            want[row * 4 + col] = c(1.0);
        }
        let want = LinearMap::new(4, 4, want);
        assert!(equivalent_up_to_scalar(&got, &want, 1e-12).unwrap());
        let mut swap = vec![c(0.0); 16];
        for (col, row) in [(0, 0), (1, 2), (2, 1), (3, 3)] {
            swap[row * 4 + col] = c(1.0);
        }
        assert!(!equivalent_up_to_scalar(&got, &LinearMap::new(4, 4, swap), 1e-9).unwrap());
    }

    #[test]
    fn scalar_multiple_and_mismatch() {
        let m = LinearMap::new(2, 2, vec![c(1.0), c(2.0), c(0.0), Complex64::new(0.0, 1.0)]);
        let m2 = m.scale(Complex64::new(0.0, 2.0));
        assert!(equivalent_up_to_scalar(&m, &m2, 1e-12).unwrap());
        assert!(equivalent_up_to_scalar(&m, &LinearMap::identity(4), 1e-9).is_err());
    }

    #[test]
    fn bare_wire_and_size_guard() {
        let g = circuit_to_zx(&Circuit::new(1));
        assert!(close(
            &evaluate_tensor(&g).unwrap(),
            &LinearMap::identity(2)
        ));
        let big = circuit_to_zx(&Circuit::new(11));
        assert!(matches!(
            evaluate_tensor(&big),
            Err(Error::TensorTooLarge(22, _))
        ));
    }
}
