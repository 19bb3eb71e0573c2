use super::ParamSet;

/// Adaptive-moment optimizer with bias correction.
#[derive(Debug, Clone)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    t: u64,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl Adam {
    pub fn new(lr: f64, param_count: usize) -> Self {
        Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            m: vec![0.0; param_count],
            v: vec![0.0; param_count],
        }
    }

    /// One update over every parameter; gradients are consumed (zeroed).
    pub fn step(&mut self, params: &mut dyn ParamSet) {
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        let (lr, b1, b2, eps) = (self.lr, self.beta1, self.beta2, self.eps);
        let (m, v) = (&mut self.m, &mut self.v);
        let mut idx = 0;
        params.visit(&mut |p, g| {
            debug_assert!(idx < m.len(), "optimizer state smaller than model");
            m[idx] = b1 * m[idx] + (1.0 - b1) * *g;
            v[idx] = b2 * v[idx] + (1.0 - b2) * *g * *g;
            let mhat = m[idx] / bc1;
            let vhat = v[idx] / bc2;
            *p -= lr * mhat / (vhat.sqrt() + eps);
            *g = 0.0;
            idx += 1;
        });
    }
}
