use ndarray::{Array1, Array2};
use rand_chacha::ChaCha20Rng;

use super::{ParamSet, Tensor1, Tensor2};

/// Fully connected layer, stored input-major: `y = x · W + b` with
/// `W ∈ (in × out)`.
#[derive(Debug, Clone)]
pub struct Linear {
    pub w: Tensor2,
    pub b: Tensor1,
}

impl Linear {
    pub fn new(in_dim: usize, out_dim: usize, std: f64, rng: &mut ChaCha20Rng) -> Self {
        Linear {
            w: Tensor2::randn(in_dim, out_dim, std, rng),
            b: Tensor1::zeros(out_dim),
        }
    }

    pub fn in_dim(&self) -> usize {
        self.w.v.nrows()
    }

    pub fn out_dim(&self) -> usize {
        self.w.v.ncols()
    }

    pub fn forward(&self, x: &Array1<f64>) -> Array1<f64> {
        x.dot(&self.w.v) + &self.b.v
    }

    /// Accumulates parameter gradients and returns dx.
    pub fn backward(&mut self, x: &Array1<f64>, dy: &Array1<f64>) -> Array1<f64> {
        for (i, &xi) in x.iter().enumerate() {
            for (j, &dj) in dy.iter().enumerate() {
                self.w.g[[i, j]] += xi * dj;
            }
        }
        self.b.g += dy;
        self.w.v.dot(dy)
    }

    pub fn forward_rows(&self, x: &Array2<f64>) -> Array2<f64> {
        x.dot(&self.w.v) + &self.b.v
    }

    /// Row-batched backward: accumulates gradients, returns dX.
    pub fn backward_rows(&mut self, x: &Array2<f64>, dy: &Array2<f64>) -> Array2<f64> {
        self.w.g += &x.t().dot(dy);
        self.b.g += &dy.sum_axis(ndarray::Axis(0));
        dy.dot(&self.w.v.t())
    }
}

impl ParamSet for Linear {
    fn visit(&mut self, f: &mut dyn FnMut(&mut f64, &mut f64)) {
        self.w.visit(f);
        self.b.visit(f);
    }
}
