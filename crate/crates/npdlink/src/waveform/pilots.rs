//! Pilot patterns for the classical receiver.
//!
//! Patterns are named by density: `1p` places one pilot symbol at 20% of the
//! frame, `2p` adds a second at 70%; the `...2` variants use every second
//! subcarrier (the odd ones) instead of all of them. `none` reserves
//! nothing, which is the pilotless configuration the neural receiver runs
//! with.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PilotPattern {
    None,
    /// One pilot symbol, every subcarrier.
    OneFull,
    /// One pilot symbol, odd subcarriers.
    OneHalf,
    /// Two pilot symbols, every subcarrier.
    TwoFull,
    /// Two pilot symbols, odd subcarriers.
    TwoHalf,
}

impl PilotPattern {
    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "none" => Some(PilotPattern::None),
            "1p" => Some(PilotPattern::OneFull),
            "1p2" => Some(PilotPattern::OneHalf),
            "2p" => Some(PilotPattern::TwoFull),
            "2p2" => Some(PilotPattern::TwoHalf),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            PilotPattern::None => "none",
            PilotPattern::OneFull => "1p",
            PilotPattern::OneHalf => "1p2",
            PilotPattern::TwoFull => "2p",
            PilotPattern::TwoHalf => "2p2",
        }
    }

    fn half_density(&self) -> bool {
        matches!(self, PilotPattern::OneHalf | PilotPattern::TwoHalf)
    }

    /// Pilot symbol indices within a frame of `n_symbols`.
    pub fn symbol_indices(&self, n_symbols: usize) -> Vec<usize> {
        assert!(n_symbols >= 1);
        let first = n_symbols * 2 / 10;
        let second = n_symbols * 7 / 10;
        let mut idx = match self {
            PilotPattern::None => vec![],
            PilotPattern::OneFull | PilotPattern::OneHalf => vec![first],
            PilotPattern::TwoFull | PilotPattern::TwoHalf => vec![first, second],
        };
        idx.dedup();
        idx
    }

    /// Concrete layout for a grid.
    pub fn layout(&self, n_symbols: usize, n_subcarriers: usize) -> PilotLayout {
        let symbols = self.symbol_indices(n_symbols);
        let subcarriers: Vec<usize> = if self.half_density() {
            (1..n_subcarriers).step_by(2).collect()
        } else {
            (0..n_subcarriers).collect()
        };
        PilotLayout {
            n_symbols,
            n_subcarriers,
            symbols,
            subcarriers,
        }
    }
}

/// Resolved pilot resource-element positions for one grid geometry.
#[derive(Clone, Debug)]
pub struct PilotLayout {
    n_symbols: usize,
    n_subcarriers: usize,
    /// Pilot-bearing OFDM symbols, ascending.
    pub symbols: Vec<usize>,
    /// Pilot-bearing subcarriers within those symbols, ascending.
    pub subcarriers: Vec<usize>,
}

impl PilotLayout {
    pub fn is_pilot(&self, symbol: usize, subcarrier: usize) -> bool {
        self.symbols.contains(&symbol) && self.subcarriers.binary_search(&subcarrier).is_ok()
    }

    /// Pilot positions in fill order (symbol-major, subcarrier within).
    pub fn positions(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.symbols.len() * self.subcarriers.len());
        for &sym in &self.symbols {
            for &sc in &self.subcarriers {
                out.push((sym, sc));
            }
        }
        out
    }

    pub fn n_pilot_res(&self) -> usize {
        self.symbols.len() * self.subcarriers.len()
    }

    /// Data resource elements (everything that is not a pilot), in fill
    /// order.
    pub fn data_positions(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.n_symbols * self.n_subcarriers - self.n_pilot_res());
        for sym in 0..self.n_symbols {
            for sc in 0..self.n_subcarriers {
                if !self.is_pilot(sym, sc) {
                    out.push((sym, sc));
                }
            }
        }
        out
    }
}

/// Seeded unit-power QPSK pilot values, one per pilot position in fill
/// order. Transmitter and receiver share the seed.
pub fn pilot_values(count: usize, seed: u64) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x0070_696c_6f74); // "pilot" tag
    let a = std::f64::consts::FRAC_1_SQRT_2;
    (0..count)
        .map(|_| {
            let re = if rng.gen_bool(0.5) { a } else { -a };
            let im = if rng.gen_bool(0.5) { a } else { -a };
            Complex64::new(re, im)
        })
        .collect()
}
