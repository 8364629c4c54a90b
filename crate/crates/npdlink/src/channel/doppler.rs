//! Jakes-spectrum fading processes by sum of sinusoids.
//!
//! Each path amplitude is a stationary complex Gaussian process with the
//! classical Jakes autocorrelation `J_0(2 pi f_D tau)`, realized as
//!
//! ```text
//! x(t) = sum_k c_k exp(i 2 pi f_D cos(theta_k) t)
//! ```
//!
//! with `K` arrival angles equally spaced around the circle, a shared random
//! rotation so the angle set differs per realization, and iid coefficients
//! `c_k ~ CN(0, 1/K)`. Gaussian coefficients make `x(t)` exactly Gaussian at
//! every `t` (not just asymptotically in `K`), and averaging the rotation
//! gives exactly the Jakes autocorrelation in expectation.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// Number of sinusoids per realized process.
pub const JAKES_SINUSOIDS: usize = 32;

/// One realization of a unit-variance Jakes fading process.
#[derive(Clone, Debug)]
pub struct JakesProcess {
    /// Angular frequencies `2 pi f_D cos(theta_k)` in rad/s.
    omegas: Vec<f64>,
    coeffs: Vec<Complex64>,
}

impl JakesProcess {
    /// Draws a realization for maximum Doppler shift `max_doppler_hz`.
    /// `max_doppler_hz = 0` degenerates to a time-constant CN(0,1) gain.
    pub fn new<R: Rng>(max_doppler_hz: f64, rng: &mut R) -> Self {
        assert!(max_doppler_hz >= 0.0);
        let k = JAKES_SINUSOIDS;
        let rotation: f64 = rng.gen::<f64>();
        let scale = (1.0 / k as f64).sqrt();
        let mut omegas = Vec::with_capacity(k);
        let mut coeffs = Vec::with_capacity(k);
        for i in 0..k {
            let theta = 2.0 * std::f64::consts::PI * (i as f64 + rotation) / k as f64;
            omegas.push(2.0 * std::f64::consts::PI * max_doppler_hz * theta.cos());
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            // CN(0, 1/K): each real dimension has variance 1/(2K).
            coeffs.push(Complex64::new(re, im) * (scale / 2.0f64.sqrt()));
        }
        JakesProcess { omegas, coeffs }
    }

    /// Value of the process at time `t_s` seconds.
    pub fn sample(&self, t_s: f64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (w, c) in self.omegas.iter().zip(&self.coeffs) {
            acc += c * Complex64::from_polar(1.0, w * t_s);
        }
        acc
    }
}
