//! OFDM modulation with a cyclic prefix.
//!
//! Transforms are unitary (scaled by `1/sqrt(n)` in both directions), so
//! per-sample time-domain power equals per-resource-element power and AWGN
//! keeps its variance through demodulation. All subcarriers of the FFT are
//! usable; the occupied bandwidth is `n_subcarriers * subcarrier_spacing`.

use ndarray::Array2;
use num_complex::Complex64;
use rustfft::FftPlanner;

/// A frame of resource elements: row = OFDM symbol (time), column =
/// subcarrier (frequency).
#[derive(Clone, Debug, PartialEq)]
pub struct OfdmGrid {
    pub res: Array2<Complex64>,
}

impl OfdmGrid {
    pub fn zeros(n_symbols: usize, n_subcarriers: usize) -> Self {
        OfdmGrid {
            res: Array2::zeros((n_symbols, n_subcarriers)),
        }
    }

    pub fn n_symbols(&self) -> usize {
        self.res.nrows()
    }

    pub fn n_subcarriers(&self) -> usize {
        self.res.ncols()
    }
}

/// Frame geometry: grid dimensions plus the cyclic prefix length in samples.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OfdmParams {
    pub n_subcarriers: usize,
    pub n_symbols: usize,
    pub cp_len: usize,
}

impl OfdmParams {
    pub fn samples_per_symbol(&self) -> usize {
        self.n_subcarriers + self.cp_len
    }

    pub fn samples_per_frame(&self) -> usize {
        self.samples_per_symbol() * self.n_symbols
    }

    /// IFFT each symbol row and prepend its cyclic prefix.
    pub fn modulate(&self, grid: &OfdmGrid) -> Vec<Complex64> {
        assert_eq!(grid.n_symbols(), self.n_symbols);
        assert_eq!(grid.n_subcarriers(), self.n_subcarriers);
        let n = self.n_subcarriers;
        let ifft = FftPlanner::new().plan_fft_inverse(n);
        let scale = 1.0 / (n as f64).sqrt();
        let mut out = Vec::with_capacity(self.samples_per_frame());
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        for row in grid.res.rows() {
            buf.copy_from_slice(row.as_slice().expect("row-major grid"));
            ifft.process(&mut buf);
            for v in &mut buf {
                *v *= scale;
            }
            out.extend_from_slice(&buf[n - self.cp_len..]);
            out.extend_from_slice(&buf);
        }
        out
    }

    /// Strip each cyclic prefix and FFT the remaining body.
    pub fn demodulate(&self, samples: &[Complex64]) -> OfdmGrid {
        assert_eq!(samples.len(), self.samples_per_frame(), "frame length mismatch");
        let n = self.n_subcarriers;
        let fft = FftPlanner::new().plan_fft_forward(n);
        let scale = 1.0 / (n as f64).sqrt();
        let mut grid = OfdmGrid::zeros(self.n_symbols, n);
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        for sym in 0..self.n_symbols {
            let start = sym * self.samples_per_symbol() + self.cp_len;
            buf.copy_from_slice(&samples[start..start + n]);
            fft.process(&mut buf);
            for (sc, v) in buf.iter().enumerate() {
                grid.res[[sym, sc]] = v * scale;
            }
        }
        grid
    }

    /// Per-subcarrier response of a static tapped delay line:
    /// `H_k = sum_l h_l exp(-i 2 pi l k / n)`, lags relative to `first_lag`.
    pub fn frequency_response(&self, first_lag: isize, taps: &[Complex64]) -> Vec<Complex64> {
        let n = self.n_subcarriers as f64;
        (0..self.n_subcarriers)
            .map(|k| {
                let mut h = Complex64::new(0.0, 0.0);
                for (r, &tap) in taps.iter().enumerate() {
                    let lag = (first_lag + r as isize) as f64;
                    let phase = -2.0 * std::f64::consts::PI * lag * k as f64 / n;
                    h += tap * Complex64::from_polar(1.0, phase);
                }
                h
            })
            .collect()
    }
}
