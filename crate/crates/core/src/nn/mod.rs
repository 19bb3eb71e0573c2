//! Minimal neural-network layers with explicit forward and backward passes.
//!
//! Everything runs on `f64` CPU tensors (ndarray). Each layer owns its
//! parameters next to their gradient buffers; [`ParamSet::visit`] walks both
//! in a stable order, which is what the optimizer, checkpointing, and the
//! finite-difference tests build on.

mod adam;
mod attention;
mod conv;
mod linear;
mod transformer;

use ndarray::{Array1, Array2, Array3};
use rand::Rng;
use rand_chacha::ChaCha20Rng;

pub use adam::Adam;
pub use attention::{attention_pool_backward, attention_pool_forward, AttnPoolCache};
pub use conv::{ConvFullWidth, ConvCache};
pub use linear::Linear;
pub use transformer::{TransformerCache, TransformerConfig, TransformerEncoder};

/// Walks every (parameter, gradient) pair in a stable order.
pub trait ParamSet {
    fn visit(&mut self, f: &mut dyn FnMut(&mut f64, &mut f64));

    fn param_count(&mut self) -> usize {
        let mut n = 0;
        self.visit(&mut |_, _| n += 1);
        n
    }

    fn zero_grad(&mut self) {
        self.visit(&mut |_, g| *g = 0.0);
    }

    fn flatten_params(&mut self) -> Vec<f64> {
        let mut out = Vec::new();
        self.visit(&mut |v, _| out.push(*v));
        out
    }

    fn load_params(&mut self, flat: &[f64]) -> crate::Result<()> {
        let mut idx = 0;
        let mut overflow = false;
        self.visit(&mut |v, _| {
            if idx < flat.len() {
                *v = flat[idx];
            } else {
                overflow = true;
            }
            idx += 1;
        });
        if overflow || idx != flat.len() {
            return Err(crate::Error::Model(format!(
                "parameter count mismatch: model has {idx}, checkpoint has {}",
                flat.len()
            )));
        }
        Ok(())
    }
}

/// A vector parameter with its gradient buffer.
#[derive(Debug, Clone)]
pub struct Tensor1 {
    pub v: Array1<f64>,
    pub g: Array1<f64>,
}

impl Tensor1 {
    pub fn zeros(n: usize) -> Self {
        Tensor1 {
            v: Array1::zeros(n),
            g: Array1::zeros(n),
        }
    }

    pub fn ones(n: usize) -> Self {
        Tensor1 {
            v: Array1::ones(n),
            g: Array1::zeros(n),
        }
    }

    pub fn visit(&mut self, f: &mut dyn FnMut(&mut f64, &mut f64)) {
        for (v, g) in self.v.iter_mut().zip(self.g.iter_mut()) {
            f(v, g);
        }
    }
}

/// A matrix parameter with its gradient buffer.
#[derive(Debug, Clone)]
pub struct Tensor2 {
    pub v: Array2<f64>,
    pub g: Array2<f64>,
}

impl Tensor2 {
    pub fn randn(rows: usize, cols: usize, std: f64, rng: &mut ChaCha20Rng) -> Self {
        let v = Array2::from_shape_fn((rows, cols), |_| sample_normal(rng) * std);
        Tensor2 {
            g: Array2::zeros(v.raw_dim()),
            v,
        }
    }

    pub fn visit(&mut self, f: &mut dyn FnMut(&mut f64, &mut f64)) {
        for (v, g) in self.v.iter_mut().zip(self.g.iter_mut()) {
            f(v, g);
        }
    }
}

/// A rank-3 parameter (conv kernels) with its gradient buffer.
#[derive(Debug, Clone)]
pub struct Tensor3 {
    pub v: Array3<f64>,
    pub g: Array3<f64>,
}

impl Tensor3 {
    pub fn randn(d0: usize, d1: usize, d2: usize, std: f64, rng: &mut ChaCha20Rng) -> Self {
        let v = Array3::from_shape_fn((d0, d1, d2), |_| sample_normal(rng) * std);
        Tensor3 {
            g: Array3::zeros(v.raw_dim()),
            v,
        }
    }

    pub fn visit(&mut self, f: &mut dyn FnMut(&mut f64, &mut f64)) {
        for (v, g) in self.v.iter_mut().zip(self.g.iter_mut()) {
            f(v, g);
        }
    }
}

/// Standard normal via Box-Muller, driven by any seeded stream.
pub fn sample_normal<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = rng.random_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.random_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Row-wise softmax, numerically stabilized.
pub fn softmax_rows(x: &Array2<f64>) -> Array2<f64> {
    let mut out = x.clone();
    for mut row in out.rows_mut() {
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        row.mapv_inplace(|v| (v - max).exp());
        let sum: f64 = row.sum();
        row.mapv_inplace(|v| v / sum);
    }
    out
}

/// Softmax over a plain vector.
pub fn softmax(x: &Array1<f64>) -> Array1<f64> {
    let max = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut out = x.mapv(|v| (v - max).exp());
    let sum: f64 = out.sum();
    out.mapv_inplace(|v| v / sum);
    out
}

/// Backward through a row-wise softmax: given A = softmax(S) and dA,
/// returns dS = A ⊙ (dA − rowsum(dA ⊙ A)).
pub fn softmax_rows_backward(a: &Array2<f64>, da: &Array2<f64>) -> Array2<f64> {
    let mut ds = Array2::zeros(a.raw_dim());
    for i in 0..a.nrows() {
        let dot: f64 = a.row(i).iter().zip(da.row(i).iter()).map(|(x, y)| x * y).sum();
        for j in 0..a.ncols() {
            ds[[i, j]] = a[[i, j]] * (da[[i, j]] - dot);
        }
    }
    ds
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn softmax_rows_sum_to_one() {
        let x = Array2::from_shape_vec((2, 3), vec![1.0, 2.0, 3.0, -1.0, 0.0, 1.0]).unwrap();
        let s = softmax_rows(&x);
        for row in s.rows() {
            let sum: f64 = row.sum();
            assert!((sum - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn normal_sampler_is_deterministic() {
        let mut a = ChaCha20Rng::seed_from_u64(42);
        let mut b = ChaCha20Rng::seed_from_u64(42);
        for _ in 0..100 {
            assert_eq!(sample_normal(&mut a), sample_normal(&mut b));
        }
    }
}
