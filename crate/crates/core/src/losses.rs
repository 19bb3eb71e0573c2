//! Training objective: cross-entropy, supervised contrastive loss, the
//! pseudo-label unlabeled loss, the batch-ramp weight α(b, t), and their
//! combination. All functions are pure; gradients are provided alongside.

use ndarray::Array1;

use crate::error::{Error, Result};

/// Probabilities are clamped away from {0, 1} before every log.
pub const PROB_CLAMP: f64 = 1e-12;

fn clamp(p: f64) -> f64 {
    p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP)
}

/// Mean binary cross-entropy over positive-class probabilities:
/// `-(1/N) Σ [y log y' + (1-y) log(1-y')]`.
pub fn ce_loss(probs_pos: &[f64], labels: &[u8]) -> Result<f64> {
    if probs_pos.is_empty() || probs_pos.len() != labels.len() {
        return Err(Error::Loss(format!(
            "cross-entropy needs matching non-empty inputs, got {} probs and {} labels",
            probs_pos.len(),
            labels.len()
        )));
    }
    let n = probs_pos.len() as f64;
    let sum: f64 = probs_pos
        .iter()
        .zip(labels)
        .map(|(&p, &y)| {
            let p = clamp(p);
            if y == 1 {
                p.ln()
            } else {
                (1.0 - p).ln()
            }
        })
        .sum();
    Ok(-sum / n)
}

/// Gradient of the mean cross-entropy w.r.t. the two-class logits:
/// `(softmax - onehot) / N` per sample.
pub fn ce_grad_logits(y_pred: &[[f64; 2]], labels: &[u8]) -> Vec<Array1<f64>> {
    let n = y_pred.len() as f64;
    y_pred
        .iter()
        .zip(labels)
        .map(|(p, &y)| {
            let mut g = Array1::from_vec(vec![p[0], p[1]]);
            g[y as usize] -= 1.0;
            g / n
        })
        .collect()
}

/// Gradient of the mean cross-entropy w.r.t. the positive-class probability.
pub fn ce_grad_probs(probs_pos: &[f64], labels: &[u8]) -> Vec<f64> {
    let n = probs_pos.len() as f64;
    probs_pos
        .iter()
        .zip(labels)
        .map(|(&p, &y)| {
            let p = clamp(p);
            if y == 1 {
                -1.0 / (p * n)
            } else {
                1.0 / ((1.0 - p) * n)
            }
        })
        .collect()
}

/// Supervised contrastive loss over a labeled batch of projection vectors.
///
/// For each anchor `i` whose class has `N_{y_i} >= 2` members:
/// `(-1 / (N_{y_i} - 1)) Σ_{j≠i, y_j=y_i} log(e_ij / Σ_{k≠i} e_ik)` with
/// `e_mn = exp(h_m · h_n / τ)`, summed over anchors. Anchors whose class
/// appears once contribute zero.
pub fn scl_loss(h: &[Array1<f64>], labels: &[u8], tau: f64) -> Result<f64> {
    let n = h.len();
    if n < 2 {
        return Err(Error::Loss(format!(
            "contrastive loss needs at least 2 samples, got {n}"
        )));
    }
    if labels.len() != n {
        return Err(Error::Loss("labels and vectors disagree in length".into()));
    }
    if tau <= 0.0 {
        return Err(Error::Loss("temperature must be positive".into()));
    }
    let z = similarity_matrix(h, tau);
    let mut total = 0.0;
    for i in 0..n {
        let same = (0..n).filter(|&j| j != i && labels[j] == labels[i]).count();
        if same == 0 {
            continue;
        }
        // log-sum-exp over k != i, stabilized.
        let max_z = (0..n)
            .filter(|&k| k != i)
            .map(|k| z[i][k])
            .fold(f64::NEG_INFINITY, f64::max);
        let denom: f64 = (0..n)
            .filter(|&k| k != i)
            .map(|k| (z[i][k] - max_z).exp())
            .sum();
        let log_denom = max_z + denom.ln();
        let mut anchor = 0.0;
        for j in 0..n {
            if j != i && labels[j] == labels[i] {
                anchor += z[i][j] - log_denom;
            }
        }
        total += -anchor / same as f64;
    }
    Ok(total)
}

/// Gradient of [`scl_loss`] w.r.t. each projection vector.
pub fn scl_grad(h: &[Array1<f64>], labels: &[u8], tau: f64) -> Result<Vec<Array1<f64>>> {
    let n = h.len();
    if n < 2 {
        return Err(Error::Loss(format!(
            "contrastive loss needs at least 2 samples, got {n}"
        )));
    }
    let z = similarity_matrix(h, tau);
    let dim = h[0].len();
    let mut grads = vec![Array1::<f64>::zeros(dim); n];
    for i in 0..n {
        let same = (0..n).filter(|&j| j != i && labels[j] == labels[i]).count();
        if same == 0 {
            continue;
        }
        let max_z = (0..n)
            .filter(|&k| k != i)
            .map(|k| z[i][k])
            .fold(f64::NEG_INFINITY, f64::max);
        let denom: f64 = (0..n)
            .filter(|&k| k != i)
            .map(|k| (z[i][k] - max_z).exp())
            .sum();
        for k in 0..n {
            if k == i {
                continue;
            }
            let softmax_ik = (z[i][k] - max_z).exp() / denom;
            let positive = labels[k] == labels[i];
            // d(anchor-i loss) / d z_ik
            let dz = softmax_ik - if positive { 1.0 / same as f64 } else { 0.0 };
            if dz == 0.0 {
                continue;
            }
            let scaled = dz / tau;
            grads[i] += &(&h[k] * scaled);
            grads[k] += &(&h[i] * scaled);
        }
    }
    Ok(grads)
}

fn similarity_matrix(h: &[Array1<f64>], tau: f64) -> Vec<Vec<f64>> {
    let n = h.len();
    let mut z = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            z[i][j] = h[i].dot(&h[j]) / tau;
        }
    }
    z
}

/// `L_S = (1 - λ) L_CE + λ L_SCL`.
pub fn supervised_loss(ce: f64, scl: f64, lambda: f64) -> f64 {
    (1.0 - lambda) * ce + lambda * scl
}

/// Piecewise ramp weighting the unlabeled loss: 0 while `b <= c1·B`,
/// `(b/B)·(γ/(t+1))` while `c1·B < b <= c2·B`, and 1 beyond `c2·B`.
/// `b` is the 1-based batch ordinal, `t` the 0-based epoch ordinal.
pub fn alpha_schedule(b: usize, t: usize, total_batches: usize, c1: f64, c2: f64, gamma: f64) -> f64 {
    let b_f = b as f64;
    let big_b = total_batches as f64;
    if b_f <= c1 * big_b {
        0.0
    } else if b_f <= c2 * big_b {
        (b_f / big_b) * (gamma / (t as f64 + 1.0))
    } else {
        1.0
    }
}

/// Hard pseudo-labels by prediction argmax; exact ties go to class 0.
pub fn pseudo_labels(pseudo_pred: &[[f64; 2]]) -> Vec<u8> {
    pseudo_pred.iter().map(|p| u8::from(p[1] > p[0])).collect()
}

/// Pseudo-label loss on an unlabeled batch: cross-entropy against the
/// model's own argmax labels (which carry no gradient).
pub fn pseudo_label_loss(pseudo_pred: &[[f64; 2]]) -> Result<(f64, Vec<u8>)> {
    if pseudo_pred.is_empty() {
        return Err(Error::Loss("empty unlabeled batch".into()));
    }
    let labels = pseudo_labels(pseudo_pred);
    let probs: Vec<f64> = pseudo_pred.iter().map(|p| p[1]).collect();
    let loss = ce_loss(&probs, &labels)?;
    Ok((loss, labels))
}

/// `L = L_S + α L_U`.
pub fn total_loss(l_s: f64, l_u: f64, alpha: f64) -> f64 {
    l_s + alpha * l_u
}
