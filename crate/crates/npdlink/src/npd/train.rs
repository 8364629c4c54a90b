//! Decoder training.
//!
//! Each iteration draws a batch of blocks from a [`BlockSampler`] (uniform
//! codeword bits pushed through the caller's waveform and channel), embeds
//! the received symbols, and minimizes the sum of two staged losses:
//!
//! - the observed branch, where transmitted positions carry `E(y, N0)` rows
//!   and punctured positions the constant embedding, and
//! - the constant branch, where every position carries the constant
//!   embedding.
//!
//! The second branch gives the constant embedding a consistent meaning of
//! "no observation" at every tree level; its loss stays near 1 bit per
//! position since the labels are uniform, and a large drop indicates a bug
//! rather than learning.
//!
//! Gradients flow through F/G/H, the embedding network E, and the constant
//! embedding; one Adam step updates all of them jointly.

use ndarray::Array2;
use num_complex::Complex64;

use super::loss::{channel_arrangement, nsc_loss_backward, nsc_loss_forward};
use super::{NpdGrads, NpdParams};
use crate::bits::Bits;
use crate::nn::Adam;
use crate::polar::PunctureConfig;

/// One training block: the full-length codeword bits (transmission order,
/// punctured positions included), the received symbols for the transmitted
/// part, and the noise level the receiver conditions on.
#[derive(Clone, Debug)]
pub struct TrainBlock {
    pub x: Bits,
    pub y: Vec<Complex64>,
    pub n0: f64,
}

/// Source of training blocks. Implementations own their randomness so runs
/// are reproducible from the sampler seed.
pub trait BlockSampler {
    /// Codeword length in bits.
    fn n_bits(&self) -> usize;
    fn sample(&mut self) -> TrainBlock;
}

#[derive(Clone, Copy, Debug)]
pub struct TrainConfig {
    pub iters: usize,
    pub batch: usize,
    pub lr: f64,
    /// Record a trace point every this many iterations (0: final only).
    pub log_every: usize,
    /// Generator convention of the code this decoder will serve; fixes the
    /// channel arrangement so training pairs symbols exactly as the decoder
    /// will.
    pub include_bit_reversal: bool,
}

/// Losses of one batch, in bits per position.
#[derive(Clone, Copy, Debug)]
pub struct BatchLoss {
    pub observed_bits: f64,
    pub constant_bits: f64,
}

impl BatchLoss {
    pub fn total(&self) -> f64 {
        self.observed_bits + self.constant_bits
    }
}

#[derive(Clone, Copy, Debug)]
pub struct TrainPoint {
    pub iter: usize,
    pub observed_bits: f64,
    pub constant_bits: f64,
}

/// Evaluates the training objective on one batch and accumulates its
/// gradients. Shared by the optimizer loop and by gradient checks.
pub fn batch_loss_and_grads(
    params: &NpdParams,
    batch: &[TrainBlock],
    punct: &PunctureConfig,
    include_bit_reversal: bool,
    grads: &mut NpdGrads,
) -> BatchLoss {
    let n_bits = punct.n_bits();
    let (d, m) = (params.dims.d, params.dims.m);
    assert_eq!(m, punct.bits_per_symbol(), "bit-per-symbol mismatch");
    let blocks = batch.len();
    assert!(blocks > 0);
    let n_tx_syms = punct.n_transmit() / m;
    let perm = channel_arrangement(n_bits, include_bit_reversal);

    // Codeword position -> row index within the transmitted bit stream;
    // usize::MAX marks punctured positions.
    let mut src = vec![usize::MAX; n_bits];
    let mut next = 0;
    for (pos, entry) in src.iter_mut().enumerate() {
        if !punct.is_punctured(pos) {
            *entry = next;
            next += 1;
        }
    }

    // Embed every observed symbol of the batch in one cached pass.
    let mut e_in = Array2::zeros((blocks * n_tx_syms, 3));
    for (b, blk) in batch.iter().enumerate() {
        assert_eq!(blk.x.len(), n_bits, "codeword length mismatch");
        assert_eq!(blk.y.len(), n_tx_syms, "received symbol count mismatch");
        let log_n0 = blk.n0.log10();
        for (s, ys) in blk.y.iter().enumerate() {
            let row = b * n_tx_syms + s;
            e_in[[row, 0]] = ys.re;
            e_in[[row, 1]] = ys.im;
            e_in[[row, 2]] = log_n0;
        }
    }
    let e_cache = params.e.forward_cached(e_in);

    // Both branches ride one staged pass: blocks 0..B carry the observed
    // embeddings, blocks B..2B the constant embedding at every position,
    // with identical labels. Backpropagating the fused mean at scale 2
    // yields exactly the gradient of the sum of the two per-branch means.
    let rows = blocks * n_bits;
    let mut e0 = Array2::zeros((2 * rows, d));
    let mut v0 = Array2::zeros((2 * blocks, n_bits));
    {
        let e0s = e0.as_slice_mut().expect("standard layout");
        let e_out = e_cache.output().as_slice().expect("standard layout");
        let e_co = params.e_co.as_slice().expect("contiguous");
        for (b, blk) in batch.iter().enumerate() {
            for i in 0..n_bits {
                let pos = perm[i];
                let row = (b * n_bits + i) * d;
                v0[[b, i]] = blk.x[pos];
                v0[[blocks + b, i]] = blk.x[pos];
                let co = (pos % m) * d;
                e0s[rows * d + row..rows * d + row + d].copy_from_slice(&e_co[co..co + d]);
                if src[pos] == usize::MAX {
                    e0s[row..row + d].copy_from_slice(&e_co[co..co + d]);
                } else {
                    let from = (b * n_tx_syms + src[pos] / m) * d * m + (src[pos] % m) * d;
                    e0s[row..row + d].copy_from_slice(&e_out[from..from + d]);
                }
            }
        }
    }

    let out = nsc_loss_forward(params, e0, &v0);
    let de = nsc_loss_backward(params, &out.cache, 2.0, grads);

    // Route embedding gradients back to E and the constant embedding.
    let mut d_e_out = Array2::zeros((blocks * n_tx_syms, d * m));
    {
        let des = de.as_slice().expect("standard layout");
        let des_co = &des[rows * d..];
        let deo = d_e_out.as_slice_mut().expect("standard layout");
        let e_co_g = grads.e_co.as_slice_mut().expect("contiguous");
        for b in 0..blocks {
            for (i, &pos) in perm.iter().enumerate() {
                let row = (b * n_bits + i) * d;
                let co = (pos % m) * d;
                for c in 0..d {
                    e_co_g[co + c] += des_co[row + c];
                }
                if src[pos] == usize::MAX {
                    for c in 0..d {
                        e_co_g[co + c] += des[row + c];
                    }
                } else {
                    let to = (b * n_tx_syms + src[pos] / m) * d * m + (src[pos] % m) * d;
                    for c in 0..d {
                        deo[to + c] += des[row + c];
                    }
                }
            }
        }
    }
    params.e.backward(&e_cache, d_e_out.view(), &mut grads.e);

    BatchLoss {
        observed_bits: out.cache.block_range_loss_bits(0, blocks),
        constant_bits: out.cache.block_range_loss_bits(blocks, 2 * blocks),
    }
}

/// Runs the optimizer for `cfg.iters` iterations, mutating `params` in
/// place, and returns the recorded loss trace (always including the final
/// iteration).
pub fn train<S: BlockSampler>(
    params: &mut NpdParams,
    sampler: &mut S,
    punct: &PunctureConfig,
    cfg: &TrainConfig,
) -> Vec<TrainPoint> {
    assert_eq!(sampler.n_bits(), punct.n_bits(), "sampler/code length mismatch");
    assert!(cfg.iters > 0 && cfg.batch > 0);
    let mut adam = Adam::new(cfg.lr, params.n_params());
    let mut grads = NpdGrads::zeros_like(params);
    let mut flat = Vec::with_capacity(params.n_params());
    let mut flat_grads = Vec::with_capacity(params.n_params());
    let mut trace = Vec::new();
    let mut batch = Vec::with_capacity(cfg.batch);

    for it in 1..=cfg.iters {
        batch.clear();
        for _ in 0..cfg.batch {
            batch.push(sampler.sample());
        }
        grads.reset();
        let loss = batch_loss_and_grads(params, &batch, punct, cfg.include_bit_reversal, &mut grads);

        flat.clear();
        params.write_params(&mut flat);
        flat_grads.clear();
        grads.write_flat(&mut flat_grads);
        adam.step(&mut flat, &flat_grads);
        params.read_params(&mut flat.iter().cloned());

        if (cfg.log_every != 0 && it % cfg.log_every == 0) || it == cfg.iters {
            trace.push(TrainPoint {
                iter: it,
                observed_bits: loss.observed_bits,
                constant_bits: loss.constant_bits,
            });
        }
    }
    trace
}
