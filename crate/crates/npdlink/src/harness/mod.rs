//! Run orchestration: configuration files, the end-to-end link, Monte-Carlo
//! sweeps, training datasets, and checkpoint persistence.
//!
//! Everything here is deterministic given the configured root seed. Each
//! consumer of randomness (a training run, one SNR point of a sweep, one
//! block within it) mixes the root seed with fixed stream and index labels
//! through [`derive_seed`], so results are independent of evaluation order
//! and identical across runs and thread counts.

pub mod checkpoint;
pub mod config;
pub mod dataset;
pub mod link;
pub mod montecarlo;

/// Fixed stream labels for [`derive_seed`]. Every randomness consumer gets
/// its own label so runs never share or reuse a block's rng.
pub mod streams {
    /// Training-block sampling.
    pub const TRAIN: u64 = 1;
    /// Mutual-information estimation for code design.
    pub const DESIGN: u64 = 2;
    /// Exported datasets.
    pub const DATASET: u64 = 3;
    /// Monte-Carlo evaluation; add the SNR-point index.
    pub const MONTECARLO: u64 = 16;
}

/// Derives an independent seed from a root seed and two labels.
///
/// SplitMix64-style finalizer over the concatenated inputs; changing any
/// single argument decorrelates the output. Used to give every block of
/// every stream its own RNG without coordination.
pub fn derive_seed(root: u64, stream: u64, index: u64) -> u64 {
    let mut z = root;
    for word in [stream, index] {
        z = z.wrapping_add(0x9e37_79b9_7f4a_7c15).wrapping_add(word);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^= z >> 31;
    }
    z
}
