//! Decoding with learned kernels: the trained F/G/H networks drop into the
//! generic successive-cancellation engine, with embeddings as messages
//! instead of scalar LLRs.

use ndarray::{Array1, Array2};
use num_complex::Complex64;

use super::NpdParams;
use crate::polar::crc::Crc;
use crate::polar::kernel::ScKernel;
use crate::polar::list::{sc_decode_kernel, scl_decode, SclResult};
use crate::polar::sc::ScResult;
use crate::polar::{CodeDesign, PunctureConfig};

/// [`ScKernel`] over learned networks. Messages are `d`-wide embeddings; the
/// check node is F, the bit node is G with the partial-sum bit appended, and
/// the decision LLR is the H head's logit for `P(bit = 1)`.
pub struct NpdKernel<'a> {
    params: &'a NpdParams,
}

impl<'a> NpdKernel<'a> {
    pub fn new(params: &'a NpdParams) -> Self {
        NpdKernel { params }
    }

    fn pair_input(&self, a: &Array1<f64>, b: &Array1<f64>, bit: Option<u8>) -> Array2<f64> {
        let d = self.params.dims.d;
        let width = 2 * d + usize::from(bit.is_some());
        let mut row = Array2::zeros((1, width));
        for c in 0..d {
            row[[0, c]] = a[c];
            row[[0, d + c]] = b[c];
        }
        if let Some(u) = bit {
            row[[0, 2 * d]] = f64::from(u);
        }
        row
    }
}

impl<'a> ScKernel for NpdKernel<'a> {
    type E = Array1<f64>;

    fn check(&self, a: &Array1<f64>, b: &Array1<f64>) -> Array1<f64> {
        let input = self.pair_input(a, b, None);
        self.params.f.forward(input.view()).row(0).to_owned()
    }

    fn bit(&self, a: &Array1<f64>, b: &Array1<f64>, u: u8) -> Array1<f64> {
        let input = self.pair_input(a, b, Some(u));
        self.params.g.forward(input.view()).row(0).to_owned()
    }

    fn llr(&self, e: &Array1<f64>) -> f64 {
        let mut row = Array2::zeros((1, e.len()));
        row.row_mut(0).assign(e);
        self.params.h_head.forward(row.view())[[0, 0]]
    }
}

/// Builds the full-length channel embedding vector from received symbols:
/// transmitted positions get rows of `E(y, N0)` in order, punctured positions
/// get the learned constant embedding for their bit role. This is the
/// decoder-side half of rate matching.
pub fn rate_recover(
    params: &NpdParams,
    y: &[Complex64],
    n0: f64,
    punct: &PunctureConfig,
) -> Vec<Array1<f64>> {
    let m = params.dims.m;
    assert_eq!(m, punct.bits_per_symbol(), "bit-per-symbol mismatch");
    assert_eq!(y.len() * m, punct.n_transmit(), "symbol count mismatch");
    let rows = params.embed_symbols(y, n0);
    let observed: Vec<Array1<f64>> = rows.outer_iter().map(|r| r.to_owned()).collect();
    punct.expand_with(&observed, |i| params.constant_row(i))
}

/// Successive cancellation with the learned kernels.
pub fn npd_sc_decode(
    params: &NpdParams,
    chan: &[Array1<f64>],
    design: &CodeDesign,
) -> ScResult {
    sc_decode_kernel(&NpdKernel::new(params), chan, design)
}

/// List decoding with the learned kernels, optionally CRC-aided.
pub fn npd_scl_decode(
    params: &NpdParams,
    chan: &[Array1<f64>],
    design: &CodeDesign,
    list_size: usize,
    crc: Option<&Crc>,
) -> SclResult {
    scl_decode(&NpdKernel::new(params), chan, design, list_size, crc)
}
