//! Classical pilot-based OFDM receiver, the comparison system for the
//! learned decoder: least-squares channel estimation on pilot cells,
//! per-subcarrier linear MMSE equalization, analytic bit LLRs with the
//! post-equalization noise variance, and CRC-aided list decoding.
//!
//! The receiver conditions on the operating noise variance `N0` rather than
//! estimating it from pilot residuals; this is the same side information the
//! neural decoder's embedding receives, which keeps the comparison fair.

use ndarray::Array2;
use num_complex::Complex64;
use thiserror::Error;

use crate::channel::TapTrajectory;
use crate::polar::crc::Crc;
use crate::polar::kernel::LlrKernel;
use crate::polar::list::{scl_decode, SclResult};
use crate::polar::{CodeDesign, PunctureConfig};
use crate::waveform::ofdm::{OfdmGrid, OfdmParams};
use crate::waveform::pilots::PilotLayout;
use crate::waveform::Modulation;

/// Smallest noise variance fed to the demapper. Keeps noiseless sanity runs
/// finite; every operating point of interest sits far above it.
pub const NOISE_VAR_FLOOR: f64 = 1e-30;

#[derive(Debug, Error)]
pub enum EstimateError {
    #[error("pilot layout reserves no resource elements; cannot estimate the channel")]
    NoPilots,
}

/// Channel knowledge over one OFDM frame: a complex gain per resource
/// element (same shape as the grid) and the noise variance the receiver
/// conditions on.
#[derive(Clone, Debug)]
pub struct ChannelEstimate {
    pub gains: Array2<Complex64>,
    pub noise_var: f64,
}

/// Least-squares channel estimation: `H = y/p` at pilot cells, linear
/// interpolation across subcarriers within each pilot symbol (constant
/// beyond the first and last pilot subcarrier), then linear interpolation
/// across time between pilot symbols (constant before the first and after
/// the last, so a single pilot symbol extrapolates as a constant).
///
/// `pilots` holds the transmitted pilot values in the layout's fill order.
pub fn ls_channel_estimate(
    rx: &OfdmGrid,
    layout: &PilotLayout,
    pilots: &[Complex64],
    noise_var: f64,
) -> Result<ChannelEstimate, EstimateError> {
    if layout.n_pilot_res() == 0 {
        return Err(EstimateError::NoPilots);
    }
    assert_eq!(pilots.len(), layout.n_pilot_res(), "pilot value count mismatch");
    let (n_sym, n_sc) = (rx.n_symbols(), rx.n_subcarriers());

    // One interpolated row per pilot symbol, in ascending symbol order
    // (fill order walks symbols then subcarriers, matching `pilots`).
    let mut pilot_iter = pilots.iter();
    let rows: Vec<(usize, Vec<Complex64>)> = layout
        .symbols
        .iter()
        .map(|&sym| {
            let raw: Vec<Complex64> = layout
                .subcarriers
                .iter()
                .map(|&sc| rx.res[[sym, sc]] / *pilot_iter.next().expect("count checked"))
                .collect();
            let full = (0..n_sc)
                .map(|sc| interp_clamped(&layout.subcarriers, &raw, sc))
                .collect();
            (sym, full)
        })
        .collect();

    let mut gains = Array2::zeros((n_sym, n_sc));
    let sym_index: Vec<usize> = rows.iter().map(|r| r.0).collect();
    for t in 0..n_sym {
        match sym_index.binary_search(&t) {
            Ok(i) => {
                for sc in 0..n_sc {
                    gains[[t, sc]] = rows[i].1[sc];
                }
            }
            Err(0) => {
                for sc in 0..n_sc {
                    gains[[t, sc]] = rows[0].1[sc];
                }
            }
            Err(i) if i == rows.len() => {
                for sc in 0..n_sc {
                    gains[[t, sc]] = rows[rows.len() - 1].1[sc];
                }
            }
            Err(i) => {
                let (s0, r0) = &rows[i - 1];
                let (s1, r1) = &rows[i];
                let w = (t - s0) as f64 / (s1 - s0) as f64;
                for sc in 0..n_sc {
                    gains[[t, sc]] = r0[sc] * (1.0 - w) + r1[sc] * w;
                }
            }
        }
    }
    Ok(ChannelEstimate { gains, noise_var })
}

/// Piecewise-linear interpolation through `(xs[i], vs[i])` with constant
/// extrapolation outside the covered range. `xs` ascending, nonempty.
fn interp_clamped(xs: &[usize], vs: &[Complex64], x: usize) -> Complex64 {
    match xs.binary_search(&x) {
        Ok(i) => vs[i],
        Err(0) => vs[0],
        Err(i) if i == xs.len() => vs[xs.len() - 1],
        Err(i) => {
            let w = (x - xs[i - 1]) as f64 / (xs[i] - xs[i - 1]) as f64;
            vs[i - 1] * (1.0 - w) + vs[i] * w
        }
    }
}

/// Linear MMSE estimate of the cell's symbol: `conj(H) y / (|H|^2 + N0)`.
/// Reduces to zero forcing as `N0` vanishes and to 0 as `H` vanishes (the
/// regularizer absorbs the division; `H = 0, N0 = 0` is defined as 0).
pub fn mmse_equalize(y: Complex64, h: Complex64, n0: f64) -> Complex64 {
    let denom = h.norm_sqr() + n0;
    if denom == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    h.conj() * y / denom
}

/// Effective noise variance of the MMSE output, `N0 / (|H|^2 + N0)`: the
/// residual error is treated as Gaussian after the equalizer's bias. A dead
/// cell (`H = 0`) gives 1, matching the limit for any positive `N0` and
/// making the demapped LLRs vanish together with the equalized symbol.
pub fn post_eq_noise_var(h: Complex64, n0: f64) -> f64 {
    let denom = h.norm_sqr() + n0;
    if denom == 0.0 {
        return 1.0;
    }
    (n0 / denom).max(NOISE_VAR_FLOOR)
}

/// Genie estimate for slowly varying channels: per OFDM symbol, the taps are
/// averaged over that symbol's DFT window and transformed to per-subcarrier
/// gains.
pub fn perfect_csi(ofdm: &OfdmParams, traj: &TapTrajectory, noise_var: f64) -> ChannelEstimate {
    assert_eq!(
        traj.n_samples(),
        ofdm.samples_per_frame(),
        "realization does not cover the frame"
    );
    let mut gains = Array2::zeros((ofdm.n_symbols, ofdm.n_subcarriers));
    let n_lags = traj.taps.nrows();
    let window = ofdm.n_subcarriers as f64;
    for sym in 0..ofdm.n_symbols {
        let start = sym * ofdm.samples_per_symbol() + ofdm.cp_len;
        let avg: Vec<Complex64> = (0..n_lags)
            .map(|row| {
                (start..start + ofdm.n_subcarriers)
                    .map(|t| traj.taps[[row, t]])
                    .sum::<Complex64>()
                    / window
            })
            .collect();
        let h = ofdm.frequency_response(traj.first_lag, &avg);
        for (sc, &g) in h.iter().enumerate() {
            gains[[sym, sc]] = g;
        }
    }
    ChannelEstimate { gains, noise_var }
}

/// Channel knowledge mode of the classical receiver.
#[derive(Clone, Copy, Debug)]
pub enum CsiMode<'a> {
    /// Least-squares estimation from the frame's pilots.
    Pilots,
    /// Genie access to the true realization (see [`perfect_csi`]).
    Perfect(&'a TapTrajectory),
}

/// The classical receive chain, bundled so call sites stay readable. The
/// transmitter counterpart fills data cells in fill order with the shortened
/// codeword's symbols; anything beyond those is padding the receiver skips.
#[derive(Clone, Copy, Debug)]
pub struct ClassicRx<'a> {
    pub ofdm: &'a OfdmParams,
    pub layout: &'a PilotLayout,
    pub pilot_values: &'a [Complex64],
    pub modulation: Modulation,
    pub punct: &'a PunctureConfig,
    pub design: &'a CodeDesign,
    pub list_size: usize,
    pub crc: Option<&'a Crc>,
}

impl ClassicRx<'_> {
    /// Full-length codeword LLRs for one received frame: demodulate, obtain
    /// channel gains per [`CsiMode`], MMSE-equalize the data cells, demap
    /// with the post-equalization noise variance, and zero-fill punctured
    /// positions (a punctured bit was never sent, so its LLR carries no
    /// information).
    pub fn codeword_llrs(
        &self,
        samples: &[Complex64],
        n0: f64,
        csi: CsiMode,
    ) -> Result<Vec<f64>, EstimateError> {
        let grid = self.ofdm.demodulate(samples);
        let est = match csi {
            CsiMode::Pilots => ls_channel_estimate(&grid, self.layout, self.pilot_values, n0)?,
            CsiMode::Perfect(traj) => perfect_csi(self.ofdm, traj, n0),
        };
        let data = self.layout.data_positions();
        assert_eq!(
            data.len() + self.layout.n_pilot_res(),
            grid.n_symbols() * grid.n_subcarriers(),
            "pilot layout does not match the frame geometry"
        );
        let m = self.modulation.bits_per_symbol();
        assert_eq!(self.punct.n_transmit() % m, 0);
        let needed = self.punct.n_transmit() / m;
        assert!(
            data.len() >= needed,
            "frame has {} data cells, codeword needs {needed}",
            data.len()
        );
        let mut eq = Vec::with_capacity(needed);
        let mut nv = Vec::with_capacity(needed);
        for &(sym, sc) in data.iter().take(needed) {
            let h = est.gains[[sym, sc]];
            eq.push(mmse_equalize(grid.res[[sym, sc]], h, est.noise_var));
            nv.push(post_eq_noise_var(h, est.noise_var));
        }
        let llrs = self.modulation.demap_llrs(&eq, &nv);
        Ok(self.punct.expand_with(&llrs, |_| 0.0))
    }

    /// Decodes one frame with CRC-aided list decoding over the scalar LLR
    /// kernel.
    pub fn receive(
        &self,
        samples: &[Complex64],
        n0: f64,
        csi: CsiMode,
    ) -> Result<SclResult, EstimateError> {
        let llrs = self.codeword_llrs(samples, n0, csi)?;
        Ok(scl_decode(&LlrKernel, &llrs, self.design, self.list_size, self.crc))
    }
}
