use ndarray::{Array1, Array2, Axis};

use super::{softmax_rows, softmax_rows_backward};

/// Cache for [`attention_pool_forward`].
#[derive(Debug, Clone)]
pub struct AttnPoolCache {
    pub rows: Array2<f64>,
    pub attn: Array2<f64>,
    pub pooled: Array1<f64>,
    pub norm: f64,
}

const NORM_EPS: f64 = 1e-12;

/// Parameter-free scaled dot-product self-attention over a short row
/// sequence, mean-pooled and L2-normalized.
///
/// With `m` rows of width `k`: `S = R·Rᵀ/√k`, `A = softmax_rows(S)`,
/// `O = A·R`; the output is `mean_rows(O)` scaled to unit length. When all
/// rows are equal the attention is the identity on that common row.
pub fn attention_pool_forward(rows: &Array2<f64>) -> (Array1<f64>, AttnPoolCache) {
    let k = rows.ncols() as f64;
    let scores = rows.dot(&rows.t()) / k.sqrt();
    let attn = softmax_rows(&scores);
    let mixed = attn.dot(rows);
    let pooled = mixed.mean_axis(Axis(0)).expect("non-empty rows");
    let norm = pooled.iter().map(|v| v * v).sum::<f64>().sqrt().max(NORM_EPS);
    let out = &pooled / norm;
    (
        out,
        AttnPoolCache {
            rows: rows.clone(),
            attn,
            pooled,
            norm,
        },
    )
}

/// Backward pass; returns the gradient w.r.t. the input rows.
pub fn attention_pool_backward(cache: &AttnPoolCache, dout: &Array1<f64>) -> Array2<f64> {
    let m = cache.rows.nrows();
    let k = cache.rows.ncols() as f64;
    // L2 normalization: h = p/‖p‖ ⇒ dp = (dh − h (h·dh)) / ‖p‖.
    let h = &cache.pooled / cache.norm;
    let hd: f64 = h.iter().zip(dout.iter()).map(|(a, b)| a * b).sum();
    let dpooled = (dout - &(h * hd)) / cache.norm;
    // Mean pooling spreads the gradient uniformly over rows.
    let mut dmixed = Array2::zeros((m, cache.rows.ncols()));
    for mut row in dmixed.rows_mut() {
        row.assign(&(&dpooled / m as f64));
    }
    // mixed = A · R
    let dattn = dmixed.dot(&cache.rows.t());
    let mut drows = cache.attn.t().dot(&dmixed);
    // A = softmax(S), S = R·Rᵀ/√k
    let dscores = softmax_rows_backward(&cache.attn, &dattn);
    drows += &((dscores.dot(&cache.rows) + dscores.t().dot(&cache.rows)) / k.sqrt());
    drows
}
