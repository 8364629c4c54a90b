//! Mutual-information estimation and information-set selection.
//!
//! The staged loss at its final stage scores every decoder phase with a
//! cross-entropy against the true `u` bit; `1 - CE_i` lower-bounds the
//! information rate the sequential decoder can realize at phase `i` (with
//! ideal decision feedback), up to estimation noise. Ranking positions by
//! this proxy and keeping the best `k + crc_len` as the information set is
//! the code-design rule used throughout.

use ndarray::{Array2, ArrayView2};

use super::loss::{leaf_position_ce_bits, nsc_loss_forward};
use super::NpdParams;

/// Rate estimates accumulated from staged-loss evaluations.
#[derive(Clone, Debug)]
pub struct MiEstimate {
    /// `1 - CE` in bits per decoder phase. Estimates are raw: sampling noise
    /// or an untrained head can push them slightly below 0 or they may sit
    /// anywhere up to 1.
    pub per_position: Vec<f64>,
    /// Mean of `per_position`, the symmetric-capacity proxy for the whole
    /// block.
    pub mean: f64,
    /// `1 -` mean cross-entropy per stage (stage 0 first); the final entry
    /// matches `mean`.
    pub per_stage: Vec<f64>,
    /// Number of blocks the estimate averaged over.
    pub blocks: usize,
}

/// Streaming accumulator so estimation can run over many batches without
/// holding them all.
pub struct MiAccumulator {
    n_bits: usize,
    blocks: usize,
    position_ce_sum: Vec<f64>,
    stage_ce_sum: Vec<f64>,
}

impl MiAccumulator {
    pub fn new(n_bits: usize) -> Self {
        assert!(n_bits.is_power_of_two() && n_bits >= 2);
        let stages = n_bits.trailing_zeros() as usize + 1;
        MiAccumulator {
            n_bits,
            blocks: 0,
            position_ce_sum: vec![0.0; n_bits],
            stage_ce_sum: vec![0.0; stages],
        }
    }

    /// Scores one batch. `e0` and `v0` follow the staged-loss layout and
    /// must already be in the engine's channel arrangement, so that position
    /// `i` of the estimate is decoder phase `i`.
    pub fn update(&mut self, params: &NpdParams, e0: ArrayView2<f64>, v0: &Array2<u8>) {
        assert_eq!(v0.ncols(), self.n_bits);
        let out = nsc_loss_forward(params, e0.to_owned(), v0);
        let blocks = v0.nrows();
        for (sum, ce) in self
            .position_ce_sum
            .iter_mut()
            .zip(leaf_position_ce_bits(&out.cache))
        {
            *sum += ce * blocks as f64;
        }
        for (sum, &ce) in self.stage_ce_sum.iter_mut().zip(&out.per_stage_bits) {
            *sum += ce * blocks as f64;
        }
        self.blocks += blocks;
    }

    pub fn blocks(&self) -> usize {
        self.blocks
    }

    pub fn finish(self) -> MiEstimate {
        assert!(self.blocks > 0, "no batches accumulated");
        let norm = self.blocks as f64;
        let per_position: Vec<f64> = self
            .position_ce_sum
            .iter()
            .map(|&s| 1.0 - s / norm)
            .collect();
        let mean = per_position.iter().sum::<f64>() / self.n_bits as f64;
        let per_stage = self
            .stage_ce_sum
            .iter()
            .map(|&s| 1.0 - s / norm)
            .collect();
        MiEstimate {
            per_position,
            mean,
            per_stage,
            blocks: self.blocks,
        }
    }
}

/// Picks the `count` positions with the highest rate estimates as the
/// information set. Ties keep the lower index; the result is ascending.
pub fn design_info_set(per_position: &[f64], count: usize) -> Vec<usize> {
    assert!(count <= per_position.len());
    let mut order: Vec<usize> = (0..per_position.len()).collect();
    order.sort_by(|&a, &b| {
        per_position[b]
            .partial_cmp(&per_position[a])
            .expect("rate estimates must be finite")
            .then(a.cmp(&b))
    });
    let mut set = order[..count].to_vec();
    set.sort_unstable();
    set
}
