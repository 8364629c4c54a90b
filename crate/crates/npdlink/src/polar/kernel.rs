//! Successive-cancellation message kernels.
//!
//! LLRs follow the crate convention `log P(bit = 1) / P(bit = 0)`. Under it
//! the exact check-node combination carries a leading minus sign:
//!
//! ```text
//! check(a, b) = -2 atanh(tanh(a/2) tanh(b/2))
//! bit(a, b, u) = b + (-1)^u a
//! ```
//!
//! (The familiar plus-sign box-plus holds for `log P(0)/P(1)`; flipping the
//! sign of all three LLRs in that identity yields the form above.)
//!
//! The [`ScKernel`] trait abstracts the embedding type and the three node
//! operations so one decoding engine serves both the scalar LLR kernel and
//! learned vector kernels.

/// Saturation bound applied to demapper outputs before they enter a decoder.
/// Exp-domain quantities at 40 are below 1e-17 of the alternative, far past
/// any decision boundary, while staying orders of magnitude inside f64 range
/// for sums along a decoding path.
pub const LLR_CLAMP: f64 = 40.0;

/// Clamps an LLR to `[-LLR_CLAMP, LLR_CLAMP]`.
pub fn clamp_llr(l: f64) -> f64 {
    l.clamp(-LLR_CLAMP, LLR_CLAMP)
}

/// Exact check-node combination, evaluated in a form that never overflows:
/// `-[sgn(a) sgn(b) min(|a|,|b|) + log1p(e^-|a+b|) - log1p(e^-|a-b|)]`.
pub fn check_node(a: f64, b: f64) -> f64 {
    let sgn = if (a < 0.0) ^ (b < 0.0) { -1.0 } else { 1.0 };
    let min = a.abs().min(b.abs());
    -(sgn * min + (-(a + b).abs()).exp().ln_1p() - (-(a - b).abs()).exp().ln_1p())
}

/// Bit-node combination given the decision `u` taken on the sibling branch.
pub fn bit_node(a: f64, b: f64, u: u8) -> f64 {
    debug_assert!(u <= 1);
    if u == 0 {
        b + a
    } else {
        b - a
    }
}

/// Hard decision: 1 when the LLR favours bit 1. Exact zero resolves to 0.
pub fn hard_decision(l: f64) -> u8 {
    (l > 0.0) as u8
}

/// Node operations for a successive-cancellation tree over embeddings of
/// type `E`. `llr` projects an embedding to the scalar decision metric.
pub trait ScKernel {
    type E: Clone;

    fn check(&self, a: &Self::E, b: &Self::E) -> Self::E;
    fn bit(&self, a: &Self::E, b: &Self::E, u: u8) -> Self::E;
    fn llr(&self, e: &Self::E) -> f64;
}

/// The classical kernel: embeddings are scalar LLRs and the projection is
/// the identity.
#[derive(Clone, Copy, Debug, Default)]
pub struct LlrKernel;

impl ScKernel for LlrKernel {
    type E = f64;

    fn check(&self, a: &f64, b: &f64) -> f64 {
        check_node(*a, *b)
    }

    fn bit(&self, a: &f64, b: &f64, u: u8) -> f64 {
        bit_node(*a, *b, u)
    }

    fn llr(&self, e: &f64) -> f64 {
        *e
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Literal tanh/atanh form; overflows for large inputs, so it is only a
    /// reference for moderate LLRs.
    fn check_node_naive(a: f64, b: f64) -> f64 {
        -2.0 * ((a / 2.0).tanh() * (b / 2.0).tanh()).atanh()
    }

    #[test]
    fn check_node_hand_values() {
        // Equal signs give a negative output under this sign convention.
        let v = check_node(2.0, 2.0);
        assert!((v - check_node_naive(2.0, 2.0)).abs() < 1e-12);
        assert!(v < 0.0, "check(2,2) = {v}");
        // One input at zero erases all information.
        assert_eq!(check_node(0.0, 5.0), 0.0);
        assert_eq!(check_node(-3.0, 0.0), 0.0);
    }

    #[test]
    fn bit_node_hand_values() {
        assert_eq!(bit_node(1.5, -0.5, 0), 1.0);
        assert_eq!(bit_node(1.5, -0.5, 1), -2.0);
    }

    #[test]
    fn hard_decision_convention() {
        assert_eq!(hard_decision(0.3), 1);
        assert_eq!(hard_decision(-0.3), 0);
        assert_eq!(hard_decision(0.0), 0);
    }

    #[test]
    fn check_node_saturates_instead_of_overflowing() {
        // tanh(400) rounds to 1.0 and atanh(1) is infinite; the stable form
        // must stay finite and close to the magnitude bound min(|a|, |b|).
        let v = check_node(800.0, 900.0);
        assert!(v.is_finite());
        assert!((v + 800.0).abs() < 1e-9, "got {v}");
    }

    proptest! {
        #[test]
        fn check_node_matches_naive_form(a in -12.0f64..12.0, b in -12.0f64..12.0) {
            // The naive form is the reference but also the numerically weak
            // side: its error grows like e^min(|a|,|b|) * eps, so the range
            // stays below the point where tanh saturates.
            let fast = check_node(a, b);
            let slow = check_node_naive(a, b);
            prop_assert!((fast - slow).abs() < 1e-9, "fast={fast} slow={slow}");
        }

        #[test]
        fn check_node_is_symmetric(a in -50.0f64..50.0, b in -50.0f64..50.0) {
            prop_assert_eq!(check_node(a, b), check_node(b, a));
        }

        #[test]
        fn check_node_magnitude_bounded_by_weaker_input(
            a in -50.0f64..50.0, b in -50.0f64..50.0,
        ) {
            let v = check_node(a, b).abs();
            prop_assert!(v <= a.abs().min(b.abs()) + 1e-12);
        }

        #[test]
        fn bit_node_flips_sign_of_first_argument(a in -50.0f64..50.0, b in -50.0f64..50.0) {
            prop_assert_eq!(bit_node(a, b, 0), b + a);
            prop_assert_eq!(bit_node(a, b, 1), b - a);
        }

        #[test]
        fn clamp_respects_bound(l in -1e6f64..1e6) {
            let c = clamp_llr(l);
            prop_assert!(c.abs() <= LLR_CLAMP);
            if l.abs() <= LLR_CLAMP {
                prop_assert_eq!(c, l);
            }
        }
    }
}
