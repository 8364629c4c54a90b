//! Brute-force decision-LLR oracle.
//!
//! Enumerates every future bit assignment to compute the exact decision LLR
//! `log P(u_i = 1 | y, u^{i-1}) / P(u_i = 0 | y, u^{i-1})` at each position,
//! marginalizing all later positions uniformly (frozen or not, matching what
//! successive cancellation conditions on). Exponential in `N`; intended as a
//! test reference for small blocks.

use super::kernel::hard_decision;
use super::{polar_transform, CodeDesign};
use crate::bits::Bits;
use crate::polar::sc::ScResult;

/// Largest block the oracle accepts; `2^16` codeword evaluations per
/// position is already slow enough.
pub const MAX_ORACLE_BLOCK: usize = 16;

fn log_sum_exp(scores: &[f64]) -> f64 {
    let m = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + scores.iter().map(|s| (s - m).exp()).sum::<f64>().ln()
}

/// Exact sequential decision LLRs and decisions for a memoryless channel.
///
/// `log_w(t, b)` is the log channel density of the observation at codeword
/// position `t` given transmitted bit `b`; any additive per-position constant
/// cancels. Decisions follow the same rule as successive cancellation (hard
/// decision at information positions, the frozen fill elsewhere), so on any
/// input where no decision LLR is exactly at a boundary the trajectory is the
/// one a correct SC implementation must reproduce.
pub fn exact_llr_oracle<W>(log_w: &W, design: &CodeDesign) -> ScResult
where
    W: Fn(usize, u8) -> f64,
{
    let n_bits = design.n_bits();
    assert!(
        n_bits <= MAX_ORACLE_BLOCK,
        "oracle limited to N <= {MAX_ORACLE_BLOCK}"
    );
    let frozen = design.frozen_values();
    let mut u = Bits::zeros(n_bits);
    let mut llrs = Vec::with_capacity(n_bits);

    for i in 0..n_bits {
        let suffix_len = n_bits - 1 - i;
        let mut scores = [Vec::new(), Vec::new()];
        for bit in 0..2u8 {
            u[i] = bit;
            for suffix in 0..(1usize << suffix_len) {
                for j in 0..suffix_len {
                    u[i + 1 + j] = ((suffix >> j) & 1) as u8;
                }
                let x = polar_transform(&u, design.include_bit_reversal);
                let score: f64 = (0..n_bits).map(|t| log_w(t, x[t])).sum();
                scores[bit as usize].push(score);
            }
        }
        let llr = log_sum_exp(&scores[1]) - log_sum_exp(&scores[0]);
        llrs.push(llr);
        u[i] = if design.is_info(i) {
            hard_decision(llr)
        } else {
            frozen[i]
        };
        for j in i + 1..n_bits {
            u[j] = 0;
        }
    }

    ScResult { u_hat: u, llrs }
}

/// Log channel density for BPSK (0 -> +1, 1 -> -1 on the real axis) over a
/// complex AWGN channel with total noise variance `n0`, as a closure suitable
/// for [`exact_llr_oracle`]. Only the real parts matter for BPSK; constants
/// independent of the bit are dropped.
pub fn bpsk_awgn_log_w(y_re: Vec<f64>, n0: f64) -> impl Fn(usize, u8) -> f64 {
    move |t, b| {
        let s = 1.0 - 2.0 * f64::from(b);
        -(y_re[t] - s).powi(2) / n0
    }
}
