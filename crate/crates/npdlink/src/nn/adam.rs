//! Adam optimizer over a flat parameter vector.

/// Adam with bias-corrected first and second moments. One instance owns the
/// moment state for a fixed-size parameter vector; `step` must always be
/// called with slices of that size, in a stable parameter order.
#[derive(Clone, Debug)]
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
    /// Standard coefficients: `beta1 = 0.9`, `beta2 = 0.999`, `eps = 1e-8`.
    pub fn new(lr: f64, n_params: usize) -> Self {
        Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
        }
    }

    pub fn steps_taken(&self) -> u64 {
        self.t
    }

    /// One update: `p -= lr * m_hat / (sqrt(v_hat) + eps)`.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) {
        assert_eq!(params.len(), self.m.len(), "parameter count changed");
        assert_eq!(grads.len(), self.m.len());
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t as i32);
        let c2 = 1.0 - self.beta2.powi(self.t as i32);
        for i in 0..params.len() {
            let g = grads[i];
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let m_hat = self.m[i] / c1;
            let v_hat = self.v[i] / c2;
            params[i] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_is_signed_learning_rate() {
        // With zero state, m_hat = g and v_hat = g^2, so the first update is
        // lr * g / (|g| + eps), essentially lr * sign(g).
        let mut opt = Adam::new(0.01, 2);
        let mut p = vec![1.0, -2.0];
        opt.step(&mut p, &[0.5, -3.0]);
        assert!((p[0] - (1.0 - 0.01 * 0.5 / (0.5 + 1e-8))).abs() < 1e-15);
        assert!((p[1] - (-2.0 + 0.01 * 3.0 / (3.0 + 1e-8))).abs() < 1e-15);
        assert_eq!(opt.steps_taken(), 1);
    }

    #[test]
    fn second_step_matches_hand_rolled_reference() {
        let (b1, b2, eps, lr) = (0.9, 0.999, 1e-8, 0.001);
        let g1 = 0.3;
        let g2 = -0.7;
        let mut m = 0.0;
        let mut v = 0.0;
        let mut x_ref = 0.5f64;
        for (t, g) in [(1, g1), (2, g2)] {
            m = b1 * m + (1.0 - b1) * g;
            v = b2 * v + (1.0 - b2) * g * g;
            let mh = m / (1.0 - b1_pow(b1, t));
            let vh = v / (1.0 - b1_pow(b2, t));
            x_ref -= lr * mh / (vh.sqrt() + eps);
        }

        let mut opt = Adam::new(lr, 1);
        let mut x = vec![0.5];
        opt.step(&mut x, &[g1]);
        opt.step(&mut x, &[g2]);
        assert!((x[0] - x_ref).abs() < 1e-15, "{} vs {x_ref}", x[0]);
    }

    fn b1_pow(b: f64, t: i32) -> f64 {
        b.powi(t)
    }

    #[test]
    fn minimizes_a_quadratic() {
        let mut opt = Adam::new(0.05, 2);
        let mut p = vec![3.0, -4.0];
        for _ in 0..2000 {
            let g = [2.0 * p[0], 8.0 * p[1]];
            opt.step(&mut p, &g);
        }
        assert!(p[0].abs() < 1e-3 && p[1].abs() < 1e-3, "{p:?}");
    }
}
