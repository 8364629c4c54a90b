//! Time-varying multipath channels, noise, and amplifier nonlinearity.
//!
//! A channel realization is a tapped delay line `h_l[t]` at the signal
//! sample rate `W`: path `p` of the power-delay profile contributes its
//! fading gain `a_p(t)` (a Jakes process scaled to the path power) spread
//! over integer lags by band-limited interpolation, `sinc(l - W tau_p)`.
//! Lags run from `-4` to `ceil(W tau_max) + 4`, and the tap weights are
//! rescaled by a deterministic factor so the expected total tap energy under
//! that truncation is exactly 1.
//!
//! Applying a realization uses zero prehistory (samples before the block are
//! zero) and truncates the output to the input length.

pub mod doppler;
pub mod rapp;

use ndarray::Array2;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::util::sinc;
use doppler::JakesProcess;

/// Lags kept on each side of the delay support.
pub const LAG_MARGIN: isize = 4;

#[derive(Debug, Error)]
pub enum ChannelError {
    #[error("profile {0:?} is line-of-sight and not bundled; available: TDL-A, TDL-B, TDL-C")]
    NotBundled(String),
    #[error("unknown power-delay profile {0:?}; available: TDL-A, TDL-B, TDL-C")]
    UnknownProfile(String),
    #[error("bad profile data at line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("cannot read profile file: {0}")]
    Io(#[from] std::io::Error),
}

/// One path of a power-delay profile.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TdlTap {
    /// Delay as a multiple of the configured delay spread.
    pub delay_norm: f64,
    /// Linear power; the loaded profile sums to 1.
    pub power: f64,
}

/// A tapped-delay-line power-delay profile.
#[derive(Clone, Debug, PartialEq)]
pub struct TdlProfile {
    pub name: String,
    pub taps: Vec<TdlTap>,
}

const TDL_A: &str = include_str!("../../data/tdl_a.txt");
const TDL_B: &str = include_str!("../../data/tdl_b.txt");
const TDL_C: &str = include_str!("../../data/tdl_c.txt");

impl TdlProfile {
    /// Parses the two-column `delay_norm power_db` format (`#` comments and
    /// blank lines allowed). Powers are converted to linear and normalized
    /// to unit total.
    pub fn parse(name: &str, text: &str) -> Result<Self, ChannelError> {
        let mut taps = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut fields = line.split_whitespace();
            let parse_f64 = |s: Option<&str>, what: &str| -> Result<f64, ChannelError> {
                s.ok_or_else(|| ChannelError::Parse {
                    line: idx + 1,
                    reason: format!("missing {what}"),
                })?
                .parse::<f64>()
                .map_err(|e| ChannelError::Parse {
                    line: idx + 1,
                    reason: format!("bad {what}: {e}"),
                })
            };
            let delay_norm = parse_f64(fields.next(), "delay")?;
            let power_db = parse_f64(fields.next(), "power")?;
            if fields.next().is_some() {
                return Err(ChannelError::Parse {
                    line: idx + 1,
                    reason: "expected exactly two columns".into(),
                });
            }
            if delay_norm < 0.0 {
                return Err(ChannelError::Parse {
                    line: idx + 1,
                    reason: "negative delay".into(),
                });
            }
            taps.push(TdlTap {
                delay_norm,
                power: 10.0f64.powf(power_db / 10.0),
            });
        }
        if taps.is_empty() {
            return Err(ChannelError::Parse {
                line: 0,
                reason: "no taps found".into(),
            });
        }
        let total: f64 = taps.iter().map(|t| t.power).sum();
        for t in &mut taps {
            t.power /= total;
        }
        Ok(TdlProfile {
            name: name.to_string(),
            taps,
        })
    }

    /// Loads one of the bundled NLOS profiles by name (`TDL-A`, `TDL-B`,
    /// `TDL-C`; case and separator insensitive). The line-of-sight profiles
    /// TDL-D and TDL-E are recognized but not bundled.
    pub fn by_name(name: &str) -> Result<Self, ChannelError> {
        let canonical: String = name
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        match canonical.as_str() {
            "tdla" | "a" => TdlProfile::parse("TDL-A", TDL_A),
            "tdlb" | "b" => TdlProfile::parse("TDL-B", TDL_B),
            "tdlc" | "c" => TdlProfile::parse("TDL-C", TDL_C),
            "tdld" | "d" | "tdle" | "e" => Err(ChannelError::NotBundled(name.to_string())),
            _ => Err(ChannelError::UnknownProfile(name.to_string())),
        }
    }

    /// Loads a profile from an external file in the same format as the
    /// bundled ones.
    pub fn from_file(path: &std::path::Path) -> Result<Self, ChannelError> {
        let text = std::fs::read_to_string(path)?;
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "custom".into());
        TdlProfile::parse(&name, &text)
    }

    /// Largest normalized delay.
    pub fn max_delay_norm(&self) -> f64 {
        self.taps.iter().map(|t| t.delay_norm).fold(0.0, f64::max)
    }
}

/// Physical multipath configuration: profile, delay spread, Doppler, and the
/// sample rate the taps are realized at.
#[derive(Clone, Debug)]
pub struct MultipathSpec {
    pub profile: TdlProfile,
    pub delay_spread_s: f64,
    pub max_doppler_hz: f64,
    pub bandwidth_hz: f64,
}

/// Maximum Doppler shift for a mobile speed and carrier frequency.
pub fn doppler_from_speed(speed_m_s: f64, carrier_hz: f64) -> f64 {
    const C: f64 = 299_792_458.0;
    speed_m_s * carrier_hz / C
}

impl MultipathSpec {
    /// Integer lag range `[first_lag, last_lag]` of realized taps.
    pub fn lag_range(&self) -> (isize, isize) {
        let max_delay = self.profile.max_delay_norm() * self.delay_spread_s * self.bandwidth_hz;
        (-LAG_MARGIN, max_delay.ceil() as isize + LAG_MARGIN)
    }

    /// Deterministic weight of path `p` at lag `l` (before fading), and the
    /// global energy renormalization described at module level.
    fn weights(&self) -> (isize, Array2<f64>) {
        let (first, last) = self.lag_range();
        let n_lags = (last - first + 1) as usize;
        let w_tau: Vec<f64> = self
            .taps_delays_samples()
            .into_iter()
            .collect();
        let mut weights = Array2::zeros((self.profile.taps.len(), n_lags));
        for (p, tap) in self.profile.taps.iter().enumerate() {
            for row in 0..n_lags {
                let lag = first + row as isize;
                weights[[p, row]] = tap.power.sqrt() * sinc(lag as f64 - w_tau[p]);
            }
        }
        // Expected total energy: sum_p power_p * sum_l sinc^2(l - W tau_p).
        let energy: f64 = weights.iter().map(|w| w * w).sum();
        let scale = 1.0 / energy.sqrt();
        weights.mapv_inplace(|w| w * scale);
        (first, weights)
    }

    fn taps_delays_samples(&self) -> Vec<f64> {
        self.profile
            .taps
            .iter()
            .map(|t| t.delay_norm * self.delay_spread_s * self.bandwidth_hz)
            .collect()
    }

    /// Draws a fading realization covering `n_samples` consecutive samples.
    pub fn realize<R: Rng>(&self, n_samples: usize, rng: &mut R) -> TapTrajectory {
        let (first_lag, weights) = self.weights();
        let n_paths = weights.nrows();
        let n_lags = weights.ncols();
        let dt = 1.0 / self.bandwidth_hz;

        // Path gains over time, then spread over lags.
        let mut gains = Array2::zeros((n_paths, n_samples));
        for p in 0..n_paths {
            let process = JakesProcess::new(self.max_doppler_hz, rng);
            for t in 0..n_samples {
                gains[[p, t]] = process.sample(t as f64 * dt);
            }
        }
        let mut taps = Array2::zeros((n_lags, n_samples));
        for p in 0..n_paths {
            for row in 0..n_lags {
                let w = weights[[p, row]];
                if w == 0.0 {
                    continue;
                }
                for t in 0..n_samples {
                    taps[[row, t]] += gains[[p, t]] * w;
                }
            }
        }
        TapTrajectory { first_lag, taps }
    }
}

/// A realized (possibly time-varying) tapped delay line: row `r` is the tap
/// at integer lag `first_lag + r`, one column per output sample.
#[derive(Clone, Debug)]
pub struct TapTrajectory {
    pub first_lag: isize,
    pub taps: Array2<Complex64>,
}

impl TapTrajectory {
    /// A time-invariant channel with the given taps starting at `first_lag`.
    pub fn time_invariant(first_lag: isize, taps: &[Complex64], n_samples: usize) -> Self {
        let mut grid = Array2::zeros((taps.len(), n_samples));
        for (r, &h) in taps.iter().enumerate() {
            for t in 0..n_samples {
                grid[[r, t]] = h;
            }
        }
        TapTrajectory {
            first_lag,
            taps: grid,
        }
    }

    pub fn n_samples(&self) -> usize {
        self.taps.ncols()
    }

    /// Runs the signal through the delay line: `y[t] = sum_l h_l[t] s[t-l]`
    /// with zero prehistory (and zero posthistory for negative lags), output
    /// truncated to the input length.
    pub fn apply(&self, s: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(s.len(), self.n_samples(), "realization length mismatch");
        let n = s.len();
        let mut y = vec![Complex64::new(0.0, 0.0); n];
        for row in 0..self.taps.nrows() {
            let lag = self.first_lag + row as isize;
            for (t, out) in y.iter_mut().enumerate() {
                let src = t as isize - lag;
                if src >= 0 && (src as usize) < n {
                    *out += self.taps[[row, t]] * s[src as usize];
                }
            }
        }
        y
    }

    /// Tap values averaged over the block, for genie-aided receivers on
    /// slowly varying channels.
    pub fn time_averaged(&self) -> (isize, Vec<Complex64>) {
        let n = self.n_samples() as f64;
        let avg = self
            .taps
            .rows()
            .into_iter()
            .map(|row| row.iter().sum::<Complex64>() / n)
            .collect();
        (self.first_lag, avg)
    }

    /// Total tap energy at one time instant.
    pub fn energy_at(&self, t: usize) -> f64 {
        self.taps.column(t).iter().map(|h| h.norm_sqr()).sum()
    }
}

/// Adds circularly symmetric complex Gaussian noise of total variance `n0`
/// (that is, `n0/2` per real dimension).
pub fn add_awgn<R: Rng>(signal: &mut [Complex64], n0: f64, rng: &mut R) {
    assert!(n0 >= 0.0);
    let std = (n0 / 2.0).sqrt();
    for s in signal.iter_mut() {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        *s += Complex64::new(re * std, im * std);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn bundled_profiles_parse_and_normalize() {
        for (name, count) in [("TDL-A", 23), ("TDL-B", 23), ("TDL-C", 24)] {
            let p = TdlProfile::by_name(name).unwrap();
            assert_eq!(p.taps.len(), count, "{name}");
            let total: f64 = p.taps.iter().map(|t| t.power).sum();
            assert!((total - 1.0).abs() < 1e-12, "{name} total {total}");
            assert_eq!(p.taps[0].delay_norm, 0.0);
        }
        assert_eq!(
            TdlProfile::by_name("tdl_a").unwrap(),
            TdlProfile::by_name("TDL-A").unwrap()
        );
    }

    #[test]
    fn los_profiles_are_rejected_with_a_clear_error() {
        match TdlProfile::by_name("TDL-D") {
            Err(ChannelError::NotBundled(_)) => {}
            other => panic!("expected NotBundled, got {other:?}"),
        }
        match TdlProfile::by_name("TDL-X") {
            Err(ChannelError::UnknownProfile(_)) => {}
            other => panic!("expected UnknownProfile, got {other:?}"),
        }
    }

    #[test]
    fn parse_rejects_malformed_lines() {
        assert!(TdlProfile::parse("x", "0.0 0.0 7.0").is_err());
        assert!(TdlProfile::parse("x", "0.0").is_err());
        assert!(TdlProfile::parse("x", "-1.0 0.0").is_err());
        assert!(TdlProfile::parse("x", "# only comments\n").is_err());
        let ok = TdlProfile::parse("x", "# c\n0.0 -3.0 # inline\n1.0 -3.0\n").unwrap();
        assert_eq!(ok.taps.len(), 2);
        assert!((ok.taps[0].power - 0.5).abs() < 1e-12);
    }

    #[test]
    fn static_integer_delay_is_a_pure_shift() {
        let n = 16;
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        let s: Vec<Complex64> = (0..n)
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let h = TapTrajectory::time_invariant(2, &[Complex64::new(0.5, -0.5)], n);
        let y = h.apply(&s);
        for t in 0..n {
            let want = if t >= 2 {
                Complex64::new(0.5, -0.5) * s[t - 2]
            } else {
                Complex64::new(0.0, 0.0)
            };
            assert!((y[t] - want).norm() < 1e-15, "t={t}");
        }
    }

    #[test]
    fn apply_matches_naive_convolution_for_multitap_channel() {
        let n = 32;
        let mut rng = ChaCha8Rng::seed_from_u64(62);
        let s: Vec<Complex64> = (0..n)
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let taps = [
            Complex64::new(0.9, 0.1),
            Complex64::new(-0.3, 0.4),
            Complex64::new(0.1, -0.2),
        ];
        // first_lag = -1 exercises the acausal side too.
        let h = TapTrajectory::time_invariant(-1, &taps, n);
        let y = h.apply(&s);
        for (t, &got) in y.iter().enumerate() {
            let mut want = Complex64::new(0.0, 0.0);
            for (r, &tap) in taps.iter().enumerate() {
                let lag = -1 + r as isize;
                let src = t as isize - lag;
                if src >= 0 && (src as usize) < n {
                    want += tap * s[src as usize];
                }
            }
            assert!((got - want).norm() < 1e-15, "t={t}");
        }
    }

    fn spec_for(profile: &str, doppler: f64) -> MultipathSpec {
        MultipathSpec {
            profile: TdlProfile::by_name(profile).unwrap(),
            delay_spread_s: 100e-9,
            max_doppler_hz: doppler,
            bandwidth_hz: 1.92e6,
        }
    }

    #[test]
    fn realized_taps_have_unit_expected_energy() {
        // The rescaling makes E[sum_l |h_l[t]|^2] = 1 by construction;
        // check the sample mean over realizations.
        let spec = spec_for("TDL-A", 100.0);
        let mut rng = ChaCha8Rng::seed_from_u64(63);
        let trials = 400;
        let mut acc = 0.0;
        for _ in 0..trials {
            let h = spec.realize(4, &mut rng);
            acc += h.energy_at(0);
        }
        let mean = acc / trials as f64;
        assert!((mean - 1.0).abs() < 0.1, "mean energy {mean}");
    }

    #[test]
    fn zero_doppler_realizations_are_time_invariant() {
        let spec = spec_for("TDL-C", 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(64);
        let h = spec.realize(50, &mut rng);
        for row in 0..h.taps.nrows() {
            for t in 1..50 {
                assert!((h.taps[[row, t]] - h.taps[[row, 0]]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn lag_range_covers_delay_support_with_margin() {
        let spec = spec_for("TDL-A", 0.0);
        let (first, last) = spec.lag_range();
        assert_eq!(first, -4);
        // Max normalized delay 9.6586 * 100ns * 1.92 MHz = 1.854 samples.
        assert_eq!(last, 2 + 4);
        let h = spec.realize(8, &mut ChaCha8Rng::seed_from_u64(1));
        assert_eq!(h.taps.nrows(), (last - first + 1) as usize);
    }

    #[test]
    fn awgn_has_requested_variance_and_splits_evenly() {
        let mut rng = ChaCha8Rng::seed_from_u64(65);
        let n = 200_000;
        let mut sig = vec![Complex64::new(0.0, 0.0); n];
        add_awgn(&mut sig, 0.5, &mut rng);
        let pow: f64 = sig.iter().map(|s| s.norm_sqr()).sum::<f64>() / n as f64;
        let re_var: f64 = sig.iter().map(|s| s.re * s.re).sum::<f64>() / n as f64;
        assert!((pow - 0.5).abs() < 0.01, "total {pow}");
        assert!((re_var - 0.25).abs() < 0.01, "re {re_var}");
    }

    #[test]
    fn doppler_from_speed_matches_physics() {
        // 30 m/s at 3.5 GHz: f_D = v f_c / c = 350.24 Hz.
        let f = doppler_from_speed(30.0, 3.5e9);
        assert!((f - 350.2422936).abs() < 1e-3, "{f}");
    }
}
