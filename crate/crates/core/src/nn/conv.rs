use ndarray::{Array1, Array2};
use rand_chacha::ChaCha20Rng;

use super::{ParamSet, Tensor1, Tensor3};

/// 2-D convolution whose kernels span the full embedding width, followed by
/// max-over-time pooling: the standard text-convolution block. Input is a
/// `(rows × width)` matrix; output one value per channel.
#[derive(Debug, Clone)]
pub struct ConvFullWidth {
    /// Kernels, shape (channels, kernel_height, width).
    pub w: Tensor3,
    pub b: Tensor1,
}

/// Forward cache: the row index that won the max pooling, per channel.
#[derive(Debug, Clone)]
pub struct ConvCache {
    pub argmax: Vec<usize>,
}

impl ConvFullWidth {
    pub fn new(
        channels: usize,
        kernel_height: usize,
        width: usize,
        rng: &mut ChaCha20Rng,
    ) -> Self {
        let std = (2.0 / (kernel_height * width) as f64).sqrt();
        ConvFullWidth {
            w: Tensor3::randn(channels, kernel_height, width, std, rng),
            b: Tensor1::zeros(channels),
        }
    }

    pub fn channels(&self) -> usize {
        self.w.v.shape()[0]
    }

    pub fn kernel_height(&self) -> usize {
        self.w.v.shape()[1]
    }

    pub fn width(&self) -> usize {
        self.w.v.shape()[2]
    }

    /// Convolves and max-pools. Requires `x.nrows() >= kernel_height`.
    pub fn forward(&self, x: &Array2<f64>) -> (Array1<f64>, ConvCache) {
        let (channels, kh, width) = (self.channels(), self.kernel_height(), self.width());
        assert!(
            x.nrows() >= kh && x.ncols() == width,
            "conv input {}x{} incompatible with kernel {}x{}",
            x.nrows(),
            x.ncols(),
            kh,
            width
        );
        let out_rows = x.nrows() - kh + 1;
        let mut pooled = Array1::zeros(channels);
        let mut argmax = vec![0usize; channels];
        for c in 0..channels {
            let mut best = f64::NEG_INFINITY;
            let mut best_r = 0;
            for r in 0..out_rows {
                let mut acc = self.b.v[c];
                for i in 0..kh {
                    for j in 0..width {
                        acc += self.w.v[[c, i, j]] * x[[r + i, j]];
                    }
                }
                if acc > best {
                    best = acc;
                    best_r = r;
                }
            }
            pooled[c] = best;
            argmax[c] = best_r;
        }
        (pooled, ConvCache { argmax })
    }

    /// Accumulates parameter gradients, returns dx.
    pub fn backward(
        &mut self,
        x: &Array2<f64>,
        cache: &ConvCache,
        dpooled: &Array1<f64>,
    ) -> Array2<f64> {
        let (channels, kh, width) = (self.channels(), self.kernel_height(), self.width());
        let mut dx = Array2::zeros(x.raw_dim());
        for c in 0..channels {
            let d = dpooled[c];
            if d == 0.0 {
                continue;
            }
            let r = cache.argmax[c];
            self.b.g[c] += d;
            for i in 0..kh {
                for j in 0..width {
                    self.w.g[[c, i, j]] += d * x[[r + i, j]];
                    dx[[r + i, j]] += d * self.w.v[[c, i, j]];
                }
            }
        }
        dx
    }
}

impl ParamSet for ConvFullWidth {
    fn visit(&mut self, f: &mut dyn FnMut(&mut f64, &mut f64)) {
        self.w.visit(f);
        self.b.visit(f);
    }
}
