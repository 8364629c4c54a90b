//! Link-level simulation toolkit for neural polar decoding.
//!
//! The crate covers the full chain of a pilotless polar-coded link and its
//! classical pilot-based counterpart:
//!
//! - [`polar`]: polar transforms, rate matching by puncturing, CRC, successive
//!   cancellation (SC) and CRC-aided list (CA-SCL) decoding, plus an exhaustive
//!   log-likelihood oracle for small block lengths.
//! - [`channel`]: tapped-delay-line multipath with Jakes Doppler fading,
//!   band-limited sinc tap interpolation, AWGN, and a RAPP-style amplifier.
//! - [`waveform`]: BPSK/QPSK mapping, OFDM with configurable cyclic prefix,
//!   pilot patterns, and pulse-shaped single-carrier transmission.
//! - [`nn`]: a small dense-network engine (seeded init, batched forward and
//!   backward passes, Adam) written directly against `ndarray`.
//! - [`npd`]: the neural polar decoder — learned check/bit/embedding kernels,
//!   the staged successive-cancellation training loss, mutual-information
//!   estimation per synthetic channel, and MI-based code design.
//! - [`baseline`]: the classical receiver (pilot LS estimation, linear MMSE
//!   equalization, exact demapping) used as the comparison point.
//! - [`harness`]: link configuration, dataset generation, Monte-Carlo
//!   evaluation with deterministic per-block seeding, throughput accounting,
//!   and the binary checkpoint format.
//!
//! All arithmetic is `f64`. Log-likelihood ratios follow the convention
//! `log P(bit = 1) / P(bit = 0)` throughout; entropies and losses are in bits
//! (base-2 logarithms).


pub mod baseline;
pub mod bits;
pub mod channel;
pub mod harness;
pub mod nn;
pub mod npd;
pub mod polar;
pub(crate) mod util;
pub mod waveform;

pub use bits::Bits;
