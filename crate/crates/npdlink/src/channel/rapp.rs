//! Memoryless amplifier saturation (Rapp model).
//!
//! Amplitude compression with smoothness `p`:
//!
//! ```text
//! g(A) = A / (1 + (A / A_sat)^(2p))^(1/(2p))
//! ```
//!
//! Phase passes through unchanged. Small signals are nearly linear; the
//! output amplitude approaches `A_sat` as the input grows.

use num_complex::Complex64;

/// Default smoothness used by the link configurations.
pub const RAPP_SMOOTHNESS: f64 = 2.0;

/// Saturation amplitude for a given input backoff in dB, relative to a
/// unit-average-power input: `A_sat = 10^(ibo_db / 20)`.
pub fn saturation_from_backoff_db(ibo_db: f64) -> f64 {
    10.0f64.powf(ibo_db / 20.0)
}

/// Compressed output amplitude for input amplitude `a >= 0`.
pub fn rapp_amplitude(a: f64, a_sat: f64, p: f64) -> f64 {
    debug_assert!(a >= 0.0 && a_sat > 0.0 && p > 0.0);
    a / (1.0 + (a / a_sat).powf(2.0 * p)).powf(1.0 / (2.0 * p))
}

/// Applies the nonlinearity to a complex baseband signal in place.
pub fn apply_rapp(signal: &mut [Complex64], a_sat: f64, p: f64) {
    for s in signal.iter_mut() {
        let a = s.norm();
        if a > 0.0 {
            *s *= rapp_amplitude(a, a_sat, p) / a;
        }
    }
}
