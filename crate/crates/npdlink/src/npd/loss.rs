//! Staged successive-cancellation training loss.
//!
//! One pass transforms a batch of per-bit embeddings through `n = log2 N`
//! stages of the polar factor graph. Stage 0 is the raw embedding; stage `j`
//! splits each sub-block of stage `j-1` into interleaved pairs and maps every
//! pair `(a, b)` to a check-node output `F(a, b)` (first half of the new
//! sub-block) and a bit-node output `G(a, b, bit)` (second half), exactly the
//! recursion the decoder performs, except that here the conditioned bit is
//! the true partial sum rather than a decision. The bit labels follow the
//! same recursion over GF(2): the pair `(o, e)` becomes `o ^ e` on the check
//! side and `e` on the bit side, so the labels at stage `n` are the `u`
//! vector in decoder phase order.
//!
//! Every stage scores all `N` positions with the decision head `H` against
//! that stage's labels under binary cross-entropy in bits; the loss is the
//! mean over stages, positions, and blocks. Minimizing it simultaneously
//! trains every F/G/H evaluation the sequential decoder will ever make, and
//! `1 -` the stage-`n` per-position loss is the decoder's achievable
//! information rate estimate used for code design.
//!
//! Embedding rows must already be in the engine's channel arrangement (see
//! [`channel_arrangement`]); the stage recursion itself never permutes.

use ndarray::{Array2, ArrayViewMut2, Axis};
use std::f64::consts::LN_2;

use super::{NpdGrads, NpdParams};
use crate::bits::Bits;
use crate::nn::MlpCache;
use crate::polar::bit_reversal_perm;

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Cross-entropy of one logit against bit `v`, in bits:
/// `log2(1 + exp((1-2v) l))`. Branching on the exponential keeps the result
/// exact for a zero logit (`log2(2) = 1.0`, which downstream invariants pin)
/// and precise for large `|l|` via `ln_1p`.
fn bce_bits(l: f64, v: u8) -> f64 {
    let x = if v == 0 { l } else { -l };
    let linear = x.max(0.0) / LN_2;
    let t = (-x.abs()).exp();
    if t > 0.5 {
        linear + (1.0 + t).log2()
    } else {
        linear + t.ln_1p() / LN_2
    }
}

/// Row order in which a block's per-bit embeddings (and its codeword bits)
/// must be fed to the staged loss so leaf positions match decoder phases:
/// `arranged[i] = original[perm[i]]`. Identity for bit-reversed generators,
/// the bit-reversal permutation otherwise, mirroring the decoder engine's
/// channel arrangement.
pub fn channel_arrangement(n_bits: usize, include_bit_reversal: bool) -> Vec<usize> {
    assert!(n_bits.is_power_of_two());
    if include_bit_reversal {
        (0..n_bits).collect()
    } else {
        bit_reversal_perm(n_bits.trailing_zeros())
    }
}

/// Pair bookkeeping for one stage transition. All indices are block-local.
struct Transition {
    /// Even-position source of pair `r` (feeds both kernel inputs first).
    src_even: Vec<usize>,
    /// Odd-position source of pair `r`.
    src_odd: Vec<usize>,
    /// Destination of the check-node output of pair `r`.
    f_out: Vec<usize>,
    /// Destination of the bit-node output of pair `r`.
    g_out: Vec<usize>,
}

/// Transition from stage `j-1` to stage `j` (`j` in `1..=n`): sub-blocks of
/// size `s = N >> (j-1)` split into halves of `s/2`.
fn transition(n_bits: usize, j: usize) -> Transition {
    let s = n_bits >> (j - 1);
    let h = s / 2;
    let pairs = n_bits / 2;
    let mut tr = Transition {
        src_even: Vec::with_capacity(pairs),
        src_odd: Vec::with_capacity(pairs),
        f_out: Vec::with_capacity(pairs),
        g_out: Vec::with_capacity(pairs),
    };
    for k in 0..(n_bits / s) {
        for p in 0..h {
            tr.src_even.push(k * s + 2 * p);
            tr.src_odd.push(k * s + 2 * p + 1);
            tr.f_out.push(k * s + p);
            tr.g_out.push(k * s + h + p);
        }
    }
    tr
}

/// The per-stage bit labels of one arranged codeword, stages `0..=n`.
/// Stage 0 is the codeword itself; stage `n` is the `u` vector in decoder
/// phase order.
pub fn stage_bit_trajectories(x: &Bits) -> Vec<Bits> {
    let n_bits = x.len();
    assert!(n_bits.is_power_of_two());
    let n = n_bits.trailing_zeros() as usize;
    let mut stages = Vec::with_capacity(n + 1);
    stages.push(x.clone());
    for j in 1..=n {
        let tr = transition(n_bits, j);
        let prev = &stages[j - 1];
        let mut next = Bits::zeros(n_bits);
        for r in 0..n_bits / 2 {
            next[tr.f_out[r]] = prev[tr.src_even[r]] ^ prev[tr.src_odd[r]];
            next[tr.g_out[r]] = prev[tr.src_odd[r]];
        }
        stages.push(next);
    }
    stages
}

/// Everything the backward pass needs, retained from a forward pass.
pub struct StagedCache {
    n_bits: usize,
    blocks: usize,
    /// Decision-head caches per stage; `h_caches[j].input()` is the stage-`j`
    /// embedding batch and `.output()` its logits.
    h_caches: Vec<MlpCache>,
    f_caches: Vec<MlpCache>,
    g_caches: Vec<MlpCache>,
    /// Bit labels per stage, `[blocks, n_bits]`.
    v_stages: Vec<Array2<u8>>,
}

impl StagedCache {
    pub fn n_bits(&self) -> usize {
        self.n_bits
    }

    pub fn blocks(&self) -> usize {
        self.blocks
    }

    /// Stage-`n` logits, one row per (block, position) in block-major order.
    pub fn leaf_logits(&self) -> &Array2<f64> {
        self.h_caches.last().expect("at least one stage").output()
    }

    /// Stage-`n` bit labels, `[blocks, n_bits]`, positions in decoder phase
    /// order.
    pub fn leaf_bits(&self) -> &Array2<u8> {
        self.v_stages.last().expect("at least one stage")
    }

    /// Mean loss in bits over the block range `lo..hi`, averaged over stages
    /// the same way as the total. The staged pass never mixes rows across
    /// blocks, so this equals a separate pass over just those blocks; used
    /// when one pass carries several training branches.
    pub fn block_range_loss_bits(&self, lo: usize, hi: usize) -> f64 {
        assert!(lo < hi && hi <= self.blocks);
        let mut total = 0.0;
        for (hc, v) in self.h_caches.iter().zip(&self.v_stages) {
            let logits = hc.output();
            for b in lo..hi {
                for t in 0..self.n_bits {
                    total += bce_bits(logits[[b * self.n_bits + t, 0]], v[[b, t]]);
                }
            }
        }
        total / (self.h_caches.len() * (hi - lo) * self.n_bits) as f64
    }
}

/// Forward-pass result: losses in bits plus the cache for backpropagation.
pub struct StagedLoss {
    /// Mean over stages of the per-stage mean cross-entropy, in bits.
    pub loss_bits: f64,
    /// Per-stage mean cross-entropy in bits, stage 0 first.
    pub per_stage_bits: Vec<f64>,
    pub cache: StagedCache,
}

fn mean_bce_bits(logits: &Array2<f64>, v: &Array2<u8>) -> f64 {
    let rows = logits.nrows();
    debug_assert_eq!(rows, v.len());
    let mut total = 0.0;
    for (&l, &bit) in logits.column(0).iter().zip(v.iter()) {
        total += bce_bits(l, bit);
    }
    total / rows as f64
}

/// Runs the staged loss on `blocks = v0.nrows()` codewords.
///
/// `e0` holds the per-bit embeddings, row `b * n_bits + t` for bit `t` of
/// block `b`, already in the engine's channel arrangement; `v0` holds the
/// matching codeword bits.
pub fn nsc_loss_forward(
    params: &NpdParams,
    e0: Array2<f64>,
    v0: &Array2<u8>,
) -> StagedLoss {
    let blocks = v0.nrows();
    let n_bits = v0.ncols();
    assert!(n_bits.is_power_of_two() && n_bits >= 2);
    let n = n_bits.trailing_zeros() as usize;
    let d = params.dims.d;
    let rows = blocks * n_bits;
    assert_eq!(e0.nrows(), rows, "one embedding row per codeword bit");
    assert_eq!(e0.ncols(), d);

    let mut h_caches = Vec::with_capacity(n + 1);
    let mut f_caches = Vec::with_capacity(n);
    let mut g_caches = Vec::with_capacity(n);
    let mut v_stages = Vec::with_capacity(n + 1);
    let mut per_stage_bits = Vec::with_capacity(n + 1);

    h_caches.push(params.h_head.forward_cached(e0));
    v_stages.push(v0.clone());
    per_stage_bits.push(mean_bce_bits(h_caches[0].output(), &v_stages[0]));

    let half = n_bits / 2;
    for j in 1..=n {
        let tr = transition(n_bits, j);
        let prev_e = h_caches[j - 1].input().as_slice().expect("standard layout");
        let prev_v = &v_stages[j - 1];

        // Gathers and scatters below run on raw row chunks; these arrays are
        // all freshly allocated in standard layout.
        let mut f_in = Vec::with_capacity(blocks * half * 2 * d);
        let mut g_in = Vec::with_capacity(blocks * half * (2 * d + 1));
        let mut v_new = Array2::zeros((blocks, n_bits));
        for b in 0..blocks {
            let base = b * n_bits;
            for r in 0..half {
                let se = (base + tr.src_even[r]) * d;
                let so = (base + tr.src_odd[r]) * d;
                f_in.extend_from_slice(&prev_e[se..se + d]);
                f_in.extend_from_slice(&prev_e[so..so + d]);
                g_in.extend_from_slice(&prev_e[se..se + d]);
                g_in.extend_from_slice(&prev_e[so..so + d]);
                let o = prev_v[[b, tr.src_even[r]]];
                let e = prev_v[[b, tr.src_odd[r]]];
                g_in.push(f64::from(o ^ e));
                v_new[[b, tr.f_out[r]]] = o ^ e;
                v_new[[b, tr.g_out[r]]] = e;
            }
        }
        let f_in = Array2::from_shape_vec((blocks * half, 2 * d), f_in).expect("row fill");
        let g_in = Array2::from_shape_vec((blocks * half, 2 * d + 1), g_in).expect("row fill");

        let f_cache = params.f.forward_cached(f_in);
        let g_cache = params.g.forward_cached(g_in);
        let mut e_next = Array2::zeros((rows, d));
        {
            let en = e_next.as_slice_mut().expect("standard layout");
            let fo = f_cache.output().as_slice().expect("standard layout");
            let go = g_cache.output().as_slice().expect("standard layout");
            for b in 0..blocks {
                let base = b * n_bits;
                for r in 0..half {
                    let src = (b * half + r) * d;
                    let df = (base + tr.f_out[r]) * d;
                    let dg = (base + tr.g_out[r]) * d;
                    en[df..df + d].copy_from_slice(&fo[src..src + d]);
                    en[dg..dg + d].copy_from_slice(&go[src..src + d]);
                }
            }
        }
        f_caches.push(f_cache);
        g_caches.push(g_cache);
        h_caches.push(params.h_head.forward_cached(e_next));
        per_stage_bits.push(mean_bce_bits(h_caches[j].output(), &v_new));
        v_stages.push(v_new);
    }

    let loss_bits = per_stage_bits.iter().sum::<f64>() / (n + 1) as f64;
    StagedLoss {
        loss_bits,
        per_stage_bits,
        cache: StagedCache {
            n_bits,
            blocks,
            h_caches,
            f_caches,
            g_caches,
            v_stages,
        },
    }
}

/// Gradient of `scale * loss_bits` with respect to the stage-`j` logits.
fn logit_grad(cache: &StagedCache, j: usize, coef: f64) -> Array2<f64> {
    let logits = cache.h_caches[j].output();
    let v = &cache.v_stages[j];
    let mut dl = Array2::zeros((logits.nrows(), 1));
    for ((out, &l), &bit) in dl
        .column_mut(0)
        .iter_mut()
        .zip(logits.column(0).iter())
        .zip(v.iter())
    {
        *out = coef * (sigmoid(l) - f64::from(bit));
    }
    dl
}

/// Backpropagates `scale * loss_bits`, accumulating parameter gradients for
/// F, G, and H into `grads` and returning the gradient with respect to `e0`.
/// The bit input of G is not differentiated.
pub fn nsc_loss_backward(
    params: &NpdParams,
    cache: &StagedCache,
    scale: f64,
    grads: &mut NpdGrads,
) -> Array2<f64> {
    let n_bits = cache.n_bits;
    let blocks = cache.blocks;
    let n = n_bits.trailing_zeros() as usize;
    let d = params.dims.d;
    let half = n_bits / 2;
    let rows = blocks * n_bits;
    // d(loss)/d(logit) carries 1/(stages * rows) from the double mean and
    // 1/ln 2 from measuring cross-entropy in bits.
    let coef = scale / ((n + 1) as f64 * rows as f64 * LN_2);

    let dl = logit_grad(cache, n, coef);
    let mut de = params
        .h_head
        .backward(&cache.h_caches[n], dl.view(), &mut grads.h_head);

    for j in (1..=n).rev() {
        let tr = transition(n_bits, j);
        let de_s = de.as_slice().expect("standard layout");
        let mut d_f_out = Vec::with_capacity(blocks * half * d);
        let mut d_g_out = Vec::with_capacity(blocks * half * d);
        for b in 0..blocks {
            let base = b * n_bits;
            for r in 0..half {
                let df = (base + tr.f_out[r]) * d;
                let dg = (base + tr.g_out[r]) * d;
                d_f_out.extend_from_slice(&de_s[df..df + d]);
                d_g_out.extend_from_slice(&de_s[dg..dg + d]);
            }
        }
        let d_f_out = Array2::from_shape_vec((blocks * half, d), d_f_out).expect("row fill");
        let d_g_out = Array2::from_shape_vec((blocks * half, d), d_g_out).expect("row fill");
        let d_f_in = params
            .f
            .backward(&cache.f_caches[j - 1], d_f_out.view(), &mut grads.f);
        let d_g_in = params
            .g
            .backward(&cache.g_caches[j - 1], d_g_out.view(), &mut grads.g);

        let dl = logit_grad(cache, j - 1, coef);
        let mut de_prev =
            params
                .h_head
                .backward(&cache.h_caches[j - 1], dl.view(), &mut grads.h_head);
        scatter_pair_grads(
            de_prev.view_mut(),
            &tr,
            blocks,
            n_bits,
            d,
            &d_f_in,
            &d_g_in,
        );
        de = de_prev;
    }
    de
}

/// Adds the pair-input gradients back onto their source rows. Each source row
/// feeds exactly one F and one G evaluation, as the even or the odd operand.
fn scatter_pair_grads(
    mut de_prev: ArrayViewMut2<f64>,
    tr: &Transition,
    blocks: usize,
    n_bits: usize,
    d: usize,
    d_f_in: &Array2<f64>,
    d_g_in: &Array2<f64>,
) {
    let half = n_bits / 2;
    let dp = de_prev.as_slice_mut().expect("standard layout");
    let dfi = d_f_in.as_slice().expect("standard layout");
    let dgi = d_g_in.as_slice().expect("standard layout");
    // G's input rows carry a trailing bit column, hence the wider stride.
    for b in 0..blocks {
        let base = b * n_bits;
        for r in 0..half {
            let f_base = (b * half + r) * 2 * d;
            let g_base = (b * half + r) * (2 * d + 1);
            let se = (base + tr.src_even[r]) * d;
            let so = (base + tr.src_odd[r]) * d;
            for c in 0..d {
                dp[se + c] += dfi[f_base + c] + dgi[g_base + c];
                dp[so + c] += dfi[f_base + d + c] + dgi[g_base + d + c];
            }
        }
    }
}

/// Per-position cross-entropy of the leaf stage in bits, averaged over
/// blocks: entry `i` scores decoder phase `i`. `1 - ce[i]` is the mutual
/// information proxy used for code design.
pub fn leaf_position_ce_bits(cache: &StagedCache) -> Vec<f64> {
    let logits = cache.leaf_logits();
    let v = cache.leaf_bits();
    let n_bits = cache.n_bits;
    let mut totals = vec![0.0; n_bits];
    for b in 0..cache.blocks {
        for t in 0..n_bits {
            totals[t] += bce_bits(logits[[b * n_bits + t, 0]], v[[b, t]]);
        }
    }
    let norm = cache.blocks as f64;
    totals.iter_mut().for_each(|x| *x /= norm);
    totals
}

/// Sum of per-row cross-entropies in bits for externally supplied logits,
/// used by the observation-independent branch of training. Rows align with
/// `v` flattened in row-major order.
pub fn bce_bits_sum(logits: &Array2<f64>, v: &Array2<u8>) -> f64 {
    logits
        .axis_iter(Axis(0))
        .zip(v.iter())
        .map(|(row, &bit)| bce_bits(row[0], bit))
        .sum()
}
