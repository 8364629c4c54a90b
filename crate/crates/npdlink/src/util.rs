//! Small shared numerics.

/// Normalized sinc: `sin(pi x) / (pi x)`, with `sinc(0) = 1`. The standard
/// band-limited interpolation kernel at unit sample rate.
pub fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        return 1.0;
    }
    let px = std::f64::consts::PI * x;
    px.sin() / px
}

#[cfg(test)]
mod tests {
    use super::sinc;

    #[test]
    fn sinc_basics() {
        assert_eq!(sinc(0.0), 1.0);
        for k in 1..10 {
            assert!(sinc(k as f64).abs() < 1e-15, "zero at integer {k}");
            assert!(sinc(-(k as f64)).abs() < 1e-15);
        }
        assert!((sinc(0.5) - 2.0 / std::f64::consts::PI).abs() < 1e-15);
        assert_eq!(sinc(0.3), sinc(-0.3));
    }
}
