//! Modulation and waveform processing.
//!
//! Constellations are unit average power. QPSK uses Gray mapping with the
//! first bit of each pair on the real axis and the second on the imaginary
//! axis; each axis maps bit 0 to `+1/sqrt(2)` and bit 1 to `-1/sqrt(2)`,
//! consistent with BPSK's `0 -> +1, 1 -> -1`.

pub mod ofdm;
pub mod pilots;
pub mod singlecarrier;

use num_complex::Complex64;

use crate::bits::Bits;

const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Modulation {
    Bpsk,
    Qpsk,
}

impl Modulation {
    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bpsk" => Some(Modulation::Bpsk),
            "qpsk" => Some(Modulation::Qpsk),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Modulation::Bpsk => "bpsk",
            Modulation::Qpsk => "qpsk",
        }
    }

    pub fn bits_per_symbol(&self) -> usize {
        match self {
            Modulation::Bpsk => 1,
            Modulation::Qpsk => 2,
        }
    }

    /// All constellation points with their bit labels, in label order.
    pub fn constellation(&self) -> Vec<(Vec<u8>, Complex64)> {
        match self {
            Modulation::Bpsk => vec![
                (vec![0], Complex64::new(1.0, 0.0)),
                (vec![1], Complex64::new(-1.0, 0.0)),
            ],
            Modulation::Qpsk => {
                let a = FRAC_1_SQRT_2;
                (0..4)
                    .map(|label: u8| {
                        let b_re = label >> 1;
                        let b_im = label & 1;
                        let re = if b_re == 0 { a } else { -a };
                        let im = if b_im == 0 { a } else { -a };
                        (vec![b_re, b_im], Complex64::new(re, im))
                    })
                    .collect()
            }
        }
    }

    /// Maps bits to symbols. The bit count must be a multiple of the symbol
    /// width.
    pub fn map(&self, bits: &Bits) -> Vec<Complex64> {
        let m = self.bits_per_symbol();
        assert_eq!(bits.len() % m, 0, "bit count not a whole symbol multiple");
        match self {
            Modulation::Bpsk => (0..bits.len())
                .map(|i| Complex64::new(1.0 - 2.0 * f64::from(bits[i]), 0.0))
                .collect(),
            Modulation::Qpsk => (0..bits.len() / 2)
                .map(|s| {
                    let re = 1.0 - 2.0 * f64::from(bits[2 * s]);
                    let im = 1.0 - 2.0 * f64::from(bits[2 * s + 1]);
                    Complex64::new(re, im) * FRAC_1_SQRT_2
                })
                .collect(),
        }
    }

    /// Per-bit LLRs (`log P(1)/P(0)`) for observations `y[s] = symbol + n`,
    /// `n ~ CN(0, noise_var[s])`, by exact enumeration over the
    /// constellation. Output order matches [`Modulation::map`].
    pub fn demap_llrs(&self, y: &[Complex64], noise_var: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), noise_var.len());
        let points = self.constellation();
        let m = self.bits_per_symbol();
        let mut llrs = Vec::with_capacity(y.len() * m);
        for (ys, &nv) in y.iter().zip(noise_var) {
            assert!(nv > 0.0, "noise variance must be positive");
            // log-domain scores per point, then per-bit marginals.
            let scores: Vec<f64> = points.iter().map(|(_, s)| -(ys - s).norm_sqr() / nv).collect();
            for bit in 0..m {
                let mut num = f64::NEG_INFINITY;
                let mut den = f64::NEG_INFINITY;
                for ((label, _), &sc) in points.iter().zip(&scores) {
                    if label[bit] == 1 {
                        num = log_add(num, sc);
                    } else {
                        den = log_add(den, sc);
                    }
                }
                llrs.push(num - den);
            }
        }
        llrs
    }
}

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}
