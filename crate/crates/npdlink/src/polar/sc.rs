//! Reference successive-cancellation decoder, written as the direct tree
//! recursion. The iterative engine in [`super::list`] must match it bit for
//! bit; keeping this version free of shared state makes it easy to audit.

use super::kernel::{bit_node, check_node, hard_decision};
use super::{bit_reversal_perm, CodeDesign};
use crate::bits::Bits;

/// Successive-cancellation output: decisions and the decision LLR observed
/// at each position, both in natural `u`-domain order.
#[derive(Clone, Debug)]
pub struct ScResult {
    pub u_hat: Bits,
    pub llrs: Vec<f64>,
}

impl ScResult {
    /// Information bits (payload + CRC) of the decision vector.
    pub fn info(&self, design: &CodeDesign) -> Bits {
        design.extract_info(&self.u_hat)
    }
}

struct Ctx<'a> {
    design: &'a CodeDesign,
    frozen: Bits,
    u_hat: Bits,
    llrs: Vec<f64>,
}

/// Decodes the subtree covering `u[first..first + llrs.len()]` and returns
/// that subtree's re-encoded codeword (adjacent-pair convention: even
/// positions feed check nodes, odd positions feed bit nodes).
fn decode_node(llrs: &[f64], first: usize, ctx: &mut Ctx) -> Bits {
    if llrs.len() == 1 {
        let l = llrs[0];
        ctx.llrs.push(l);
        let u = if ctx.design.is_info(first) {
            hard_decision(l)
        } else {
            ctx.frozen[first]
        };
        ctx.u_hat.push(u);
        return Bits::from_slice(&[u]);
    }
    let half = llrs.len() / 2;
    let f: Vec<f64> = (0..half)
        .map(|i| check_node(llrs[2 * i], llrs[2 * i + 1]))
        .collect();
    let left = decode_node(&f, first, ctx);
    let g: Vec<f64> = (0..half)
        .map(|i| bit_node(llrs[2 * i], llrs[2 * i + 1], left[i]))
        .collect();
    let right = decode_node(&g, first + half, ctx);
    let mut cw = Bits::zeros(llrs.len());
    for i in 0..half {
        cw[2 * i] = left[i] ^ right[i];
        cw[2 * i + 1] = right[i];
    }
    cw
}

/// Decodes one block from per-position channel LLRs (codeword order, same
/// length and order as the transmitted `x^N` before puncturing; punctured
/// positions must carry LLR 0).
pub fn sc_decode(channel_llrs: &[f64], design: &CodeDesign) -> ScResult {
    let n_bits = design.n_bits();
    assert_eq!(channel_llrs.len(), n_bits, "LLR length mismatch");

    // The recursion is written for the bit-reversed generator B_N F^{(x)n}.
    // A code built on plain F^{(x)n} differs only by the codeword permutation
    // x_br[i] = x[perm[i]], so permuting the channel LLRs the same way
    // reduces one convention to the other.
    let llrs: Vec<f64> = if design.include_bit_reversal {
        channel_llrs.to_vec()
    } else {
        let perm = bit_reversal_perm(n_bits.trailing_zeros());
        (0..n_bits).map(|i| channel_llrs[perm[i]]).collect()
    };

    let mut ctx = Ctx {
        design,
        frozen: design.frozen_values(),
        u_hat: Bits::zeros(0),
        llrs: Vec::with_capacity(n_bits),
    };
    decode_node(&llrs, 0, &mut ctx);
    debug_assert_eq!(ctx.u_hat.len(), n_bits);
    ScResult {
        u_hat: ctx.u_hat,
        llrs: ctx.llrs,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polar::{polar_transform, FrozenFill};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn random_design(n_bits: usize, k: usize, rng: &mut ChaCha8Rng, include_br: bool) -> CodeDesign {
        let mut pos: Vec<usize> = (0..n_bits).collect();
        for i in (1..pos.len()).rev() {
            pos.swap(i, rng.gen_range(0..=i));
        }
        CodeDesign::new(
            n_bits,
            k,
            0,
            pos[..k].to_vec(),
            FrozenFill::Seeded(rng.gen()),
            include_br,
        )
    }

    /// Channel LLRs for a noiseless codeword: hugely confident, correct sign.
    fn noiseless_llrs(x: &Bits) -> Vec<f64> {
        (0..x.len()).map(|i| if x[i] == 1 { 30.0 } else { -30.0 }).collect()
    }

    #[test]
    fn noiseless_blocks_decode_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for &include_br in &[true, false] {
            for _ in 0..30 {
                let n_bits = 1usize << rng.gen_range(1..7);
                let k = rng.gen_range(1..=n_bits);
                let design = random_design(n_bits, k, &mut rng, include_br);
                let payload = Bits::random(k, &mut rng);
                let x = design.encode_info(&payload);
                let out = sc_decode(&noiseless_llrs(&x), &design);
                assert_eq!(out.info(&design), payload, "N={n_bits} k={k} br={include_br}");
            }
        }
    }

    #[test]
    fn frozen_positions_follow_the_fill_regardless_of_noise() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let design = random_design(32, 8, &mut rng, true);
        let frozen = design.frozen_values();
        let llrs: Vec<f64> = (0..32).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let out = sc_decode(&llrs, &design);
        for i in 0..32 {
            if !design.is_info(i) {
                assert_eq!(out.u_hat[i], frozen[i], "position {i}");
            }
        }
        assert_eq!(out.llrs.len(), 32);
    }

    #[test]
    fn high_snr_awgn_recovers_payload() {
        // BPSK mapping 0 -> +1, 1 -> -1 on the real axis, noise variance
        // N0/2 per real dimension, llr = -4 Re(y) / N0.
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let n0 = 0.25;
        let noise = Normal::new(0.0, (n0 / 2.0f64).sqrt()).unwrap();
        let design = random_design(64, 16, &mut rng, true);
        for _ in 0..20 {
            let payload = Bits::random(16, &mut rng);
            let x = design.encode_info(&payload);
            let llrs: Vec<f64> = (0..64)
                .map(|i| {
                    let s = 1.0 - 2.0 * f64::from(x[i]);
                    let y = s + noise.sample(&mut rng);
                    -4.0 * y / n0
                })
                .collect();
            let out = sc_decode(&llrs, &design);
            assert_eq!(out.info(&design), payload);
        }
    }

    #[test]
    fn generator_conventions_agree_after_llr_permutation() {
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        for _ in 0..20 {
            let n_bits = 32;
            let k = rng.gen_range(1..=n_bits);
            let with_br = random_design(n_bits, k, &mut rng, true);
            let without = CodeDesign::new(
                n_bits,
                k,
                0,
                with_br.info_set().to_vec(),
                with_br.frozen_fill,
                false,
            );
            let llrs: Vec<f64> = (0..n_bits).map(|_| rng.gen_range(-8.0..8.0)).collect();
            let perm = bit_reversal_perm(5);
            let permuted: Vec<f64> = (0..n_bits).map(|i| llrs[perm[i]]).collect();
            let a = sc_decode(&permuted, &with_br);
            let b = sc_decode(&llrs, &without);
            assert_eq!(a.u_hat, b.u_hat);
            for i in 0..n_bits {
                assert!((a.llrs[i] - b.llrs[i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn decisions_are_consistent_with_reencoding() {
        // Whatever the decoder decides, re-encoding its u_hat and decoding
        // the clean version of that codeword must reproduce u_hat exactly.
        let mut rng = ChaCha8Rng::seed_from_u64(25);
        let design = random_design(16, 16, &mut rng, true);
        for _ in 0..50 {
            let llrs: Vec<f64> = (0..16).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let out = sc_decode(&llrs, &design);
            let x = polar_transform(&out.u_hat, true);
            let again = sc_decode(&noiseless_llrs(&x), &design);
            assert_eq!(again.u_hat, out.u_hat);
        }
    }
}
