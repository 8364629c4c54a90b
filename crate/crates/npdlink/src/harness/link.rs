//! The end-to-end link: encoding, framing, the physical channel, and both
//! receivers, assembled from one [`LinkConfig`].
//!
//! A block passes through payload -> CRC -> polar encoding -> shortening ->
//! symbol mapping -> waveform -> amplifier -> multipath -> AWGN. The neural
//! decoder runs on a pilotless frame; the classical receiver gets the
//! configured pilot pattern, so the two modes transmit different frames but
//! share payloads and channel statistics block by block.
//!
//! SNR convention: `snr_db` is Es/N0 at the detector with unit-energy
//! constellations, so the per-symbol noise variance after OFDM demodulation
//! or matched filtering is `10^(-snr_db / 10)` in every mode. With
//! oversampling the transmit samples keep unit power and the added
//! per-sample variance rises by the oversampling factor, which the matched
//! filter takes back out.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::baseline::{ClassicRx, CsiMode, EstimateError};
use crate::bits::Bits;
use crate::channel::rapp::{apply_rapp, saturation_from_backoff_db};
use crate::channel::{
    add_awgn, doppler_from_speed, ChannelError, MultipathSpec, TapTrajectory, TdlProfile,
};
use crate::harness::config::{LinkConfig, RappConfig, Waveform};
use crate::harness::derive_seed;
use crate::npd::decode::{npd_scl_decode, rate_recover};
use crate::npd::train::{BlockSampler, TrainBlock};
use crate::npd::NpdParams;
use crate::polar::crc::Crc;
use crate::polar::kernel::LlrKernel;
use crate::polar::list::{scl_decode, SclResult};
use crate::polar::{CodeDesign, PunctureConfig};
use crate::waveform::ofdm::{OfdmGrid, OfdmParams};
use crate::waveform::pilots::{pilot_values, PilotLayout, PilotPattern};
use crate::waveform::singlecarrier::PulseShaper;

#[derive(Debug, Error)]
pub enum LinkError {
    #[error("design does not match the configuration: {0}")]
    DesignMismatch(String),
    #[error("no CRC of length {0} is available")]
    UnsupportedCrc(usize),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error("the classical receiver requires the OFDM waveform")]
    ClassicNeedsOfdm,
    #[error(transparent)]
    Estimate(#[from] EstimateError),
}

/// Which frame a transmission is built for.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TxMode {
    /// The neural decoder's frame: every resource element carries data.
    Pilotless,
    /// The classical receiver's frame with the configured pilot pattern.
    Piloted,
}

/// One OFDM frame geometry: grid dimensions, pilot layout, pilot values.
#[derive(Clone, Debug)]
pub struct OfdmFrame {
    pub params: OfdmParams,
    pub layout: PilotLayout,
    pub pilot_values: Vec<Complex64>,
}

impl OfdmFrame {
    /// Smallest frame (in OFDM symbols) whose data capacity holds
    /// `n_data_cells` symbols alongside the pattern's pilots. Spare data
    /// cells at the tail are zero-padded by the transmitter.
    fn fit(
        n_subcarriers: usize,
        cp_len: usize,
        pattern: PilotPattern,
        n_data_cells: usize,
        seed: u64,
    ) -> OfdmFrame {
        let mut n_symbols = n_data_cells.div_ceil(n_subcarriers).max(1);
        loop {
            let layout = pattern.layout(n_symbols, n_subcarriers);
            if n_symbols * n_subcarriers - layout.n_pilot_res() >= n_data_cells {
                let values = pilot_values(layout.n_pilot_res(), seed);
                return OfdmFrame {
                    params: OfdmParams {
                        n_subcarriers,
                        n_symbols,
                        cp_len,
                    },
                    layout,
                    pilot_values: values,
                };
            }
            n_symbols += 1;
        }
    }
}

enum WaveState {
    Ofdm {
        pilotless: OfdmFrame,
        piloted: OfdmFrame,
    },
    Single {
        shaper: PulseShaper,
    },
}

/// One received block along with everything needed to decode and score it.
#[derive(Clone, Debug)]
pub struct BlockTransmission {
    /// Received baseband samples (channel and noise applied).
    pub samples: Vec<Complex64>,
    /// Fading realization the block went through; `None` on pure AWGN.
    pub traj: Option<TapTrajectory>,
    /// Per-symbol noise variance at the detector, `10^(-snr_db / 10)`.
    pub n0: f64,
    /// Frame the samples were built for.
    pub mode: TxMode,
}

/// A configured link instance. Construction resolves the delay profile and
/// fixes both frame geometries; all randomness enters through the `rng`
/// arguments of the transmit methods.
pub struct Link {
    pub cfg: LinkConfig,
    pub design: CodeDesign,
    pub punct: PunctureConfig,
    pub crc: Option<Crc>,
    profile: Option<TdlProfile>,
    wave: WaveState,
}

impl Link {
    pub fn new(cfg: LinkConfig, design: CodeDesign) -> Result<Link, LinkError> {
        let mismatch = |what: &str, want: String, got: String| {
            Err(LinkError::DesignMismatch(format!(
                "{what}: config says {want}, design file says {got}"
            )))
        };
        if design.n_bits() != cfg.n_bits {
            return mismatch("n", cfg.n_bits.to_string(), design.n_bits().to_string());
        }
        if design.k() != cfg.k {
            return mismatch("k", cfg.k.to_string(), design.k().to_string());
        }
        if design.crc_len() != cfg.crc_len {
            return mismatch(
                "crc_len",
                cfg.crc_len.to_string(),
                design.crc_len().to_string(),
            );
        }
        if design.include_bit_reversal != cfg.bit_reversal {
            return mismatch(
                "bit_reversal",
                cfg.bit_reversal.to_string(),
                design.include_bit_reversal.to_string(),
            );
        }
        let crc = match cfg.crc_len {
            0 => None,
            len => Some(Crc::for_len(len).ok_or(LinkError::UnsupportedCrc(len))?),
        };
        let profile = match cfg.profile.as_str() {
            "awgn" => None,
            name => {
                let path = std::path::Path::new(name);
                Some(if path.is_file() {
                    TdlProfile::from_file(path)?
                } else {
                    TdlProfile::by_name(name)?
                })
            }
        };
        let n_data_cells = cfg.n_transmit / cfg.modulation.bits_per_symbol();
        let wave = match cfg.waveform {
            Waveform::Ofdm => WaveState::Ofdm {
                pilotless: OfdmFrame::fit(
                    cfg.subcarriers,
                    cfg.cp_len,
                    PilotPattern::None,
                    n_data_cells,
                    cfg.seed,
                ),
                piloted: OfdmFrame::fit(
                    cfg.subcarriers,
                    cfg.cp_len,
                    cfg.pilot_pattern,
                    n_data_cells,
                    cfg.seed,
                ),
            },
            Waveform::SingleCarrier => WaveState::Single {
                shaper: PulseShaper::new(cfg.oversample),
            },
        };
        let punct = PunctureConfig::new(cfg.n_bits, cfg.n_transmit, cfg.modulation.bits_per_symbol());
        Ok(Link {
            cfg,
            design,
            punct,
            crc,
            profile,
            wave,
        })
    }

    /// The frame geometry serving `mode`; `None` for single-carrier links.
    pub fn frame(&self, mode: TxMode) -> Option<&OfdmFrame> {
        match (&self.wave, mode) {
            (WaveState::Ofdm { pilotless, .. }, TxMode::Pilotless) => Some(pilotless),
            (WaveState::Ofdm { piloted, .. }, TxMode::Piloted) => Some(piloted),
            (WaveState::Single { .. }, _) => None,
        }
    }

    /// Detector-domain noise variance for an Es/N0 point.
    pub fn detection_noise_var(snr_db: f64) -> f64 {
        10.0f64.powf(-snr_db / 10.0)
    }

    /// Encodes a payload into the full-length codeword (CRC, polar
    /// transform, frozen bits).
    pub fn encode(&self, payload: &Bits) -> Bits {
        assert_eq!(payload.len(), self.cfg.k, "payload length mismatch");
        let info = match &self.crc {
            Some(crc) => crc.attach(payload),
            None => payload.clone(),
        };
        self.design.encode_info(&info)
    }

    /// Payload bits of a decoder result (information bits with the CRC
    /// stripped).
    pub fn recover_payload(&self, res: &SclResult) -> Bits {
        let info = self.design.extract_info(&res.u_hat);
        Bits::from_slice(&info.as_slice()[..self.cfg.k])
    }

    /// Transmits an encoded payload at the given Es/N0. Draws from `rng` in
    /// a fixed order (mobile speed, fading realization, noise), so matched
    /// comparisons across receivers only need matched rngs.
    pub fn transmit<R: Rng>(
        &self,
        payload: &Bits,
        snr_db: f64,
        mode: TxMode,
        rng: &mut R,
    ) -> BlockTransmission {
        let x = self.encode(payload);
        self.transmit_codeword(&x, snr_db, mode, rng)
    }

    /// Transmits raw codeword bits (transmission order, length `n`); the
    /// training stage uses this with i.i.d. uniform bits.
    pub fn transmit_codeword<R: Rng>(
        &self,
        x: &Bits,
        snr_db: f64,
        mode: TxMode,
        rng: &mut R,
    ) -> BlockTransmission {
        let n0 = Self::detection_noise_var(snr_db);
        let tx_bits = self.punct.shorten(x);
        let symbols = self.cfg.modulation.map(&tx_bits);
        let mut samples = match &self.wave {
            WaveState::Ofdm { .. } => {
                let frame = self.frame(mode).expect("ofdm state");
                let mut grid = OfdmGrid::zeros(frame.params.n_symbols, frame.params.n_subcarriers);
                for (&(sym, sc), &p) in frame.layout.positions().iter().zip(&frame.pilot_values) {
                    grid.res[[sym, sc]] = p;
                }
                for (&(sym, sc), &s) in frame.layout.data_positions().iter().zip(&symbols) {
                    grid.res[[sym, sc]] = s;
                }
                frame.params.modulate(&grid)
            }
            WaveState::Single { shaper } => shaper.shape(&symbols),
        };
        if let Some(RappConfig { p, ibo_db }) = self.cfg.rapp {
            apply_rapp(&mut samples, saturation_from_backoff_db(ibo_db), p);
        }
        let traj = self.profile.as_ref().map(|profile| {
            let speed = rng.gen_range(self.cfg.velocity_min_m_s..=self.cfg.velocity_max_m_s);
            let spec = MultipathSpec {
                profile: profile.clone(),
                delay_spread_s: self.cfg.delay_spread_ns * 1e-9,
                max_doppler_hz: doppler_from_speed(speed, self.cfg.carrier_hz),
                bandwidth_hz: self.sample_rate_hz(),
            };
            spec.realize(samples.len(), rng)
        });
        if let Some(traj) = &traj {
            samples = traj.apply(&samples);
        }
        add_awgn(&mut samples, self.sample_noise_var(n0), rng);
        BlockTransmission {
            samples,
            traj,
            n0,
            mode,
        }
    }

    /// Rate of the received sample stream.
    fn sample_rate_hz(&self) -> f64 {
        match self.wave {
            WaveState::Ofdm { .. } => self.cfg.bandwidth_hz(),
            WaveState::Single { .. } => self.cfg.bandwidth_hz() * self.cfg.oversample as f64,
        }
    }

    /// Per-sample AWGN variance that produces `n0` per detected symbol.
    fn sample_noise_var(&self, n0: f64) -> f64 {
        match self.wave {
            WaveState::Ofdm { .. } => n0,
            WaveState::Single { .. } => n0 * self.cfg.oversample as f64,
        }
    }

    /// Detector-domain symbols of a received block: OFDM data cells in fill
    /// order (padding dropped), or the matched-filter output. These pair
    /// one-to-one with the transmitted symbols.
    pub fn detect(&self, tx: &BlockTransmission) -> Vec<Complex64> {
        let n_data = self.punct.n_transmit() / self.cfg.modulation.bits_per_symbol();
        match &self.wave {
            WaveState::Ofdm { .. } => {
                let frame = self.frame(tx.mode).expect("ofdm state");
                let grid = frame.params.demodulate(&tx.samples);
                frame
                    .layout
                    .data_positions()
                    .iter()
                    .take(n_data)
                    .map(|&(sym, sc)| grid.res[[sym, sc]])
                    .collect()
            }
            WaveState::Single { shaper } => shaper.matched_filter(&tx.samples),
        }
    }

    /// Neural decoding of a received block.
    pub fn receive_npd(&self, params: &NpdParams, tx: &BlockTransmission) -> SclResult {
        let y = self.detect(tx);
        let chan = rate_recover(params, &y, tx.n0, &self.punct);
        npd_scl_decode(
            params,
            &chan,
            &self.design,
            self.cfg.list_size,
            self.crc.as_ref(),
        )
    }

    /// Classical decoding with exact per-bit log-likelihood ratios, bypassing
    /// equalization entirely: valid when the block saw no multipath, where
    /// the detector output is exactly symbol plus white noise.
    pub fn receive_classic_exact(&self, tx: &BlockTransmission) -> SclResult {
        debug_assert!(tx.traj.is_none(), "exact LLRs assume a pure AWGN block");
        let y = self.detect(tx);
        let nv = vec![tx.n0.max(crate::baseline::NOISE_VAR_FLOOR); y.len()];
        let llrs = self.cfg.modulation.demap_llrs(&y, &nv);
        let full = self.punct.expand_with(&llrs, |_| 0.0);
        scl_decode(
            &LlrKernel,
            &full,
            &self.design,
            self.cfg.list_size,
            self.crc.as_ref(),
        )
    }

    /// Classical pilot-based decoding of a received block. With
    /// `pilot_csi = false` the equalizer gets the true fading realization
    /// instead of the pilot estimate.
    pub fn receive_classic(
        &self,
        tx: &BlockTransmission,
        pilot_csi: bool,
    ) -> Result<SclResult, LinkError> {
        let WaveState::Ofdm { .. } = &self.wave else {
            return Err(LinkError::ClassicNeedsOfdm);
        };
        let frame = self.frame(tx.mode).expect("ofdm state");
        let rx = ClassicRx {
            ofdm: &frame.params,
            layout: &frame.layout,
            pilot_values: &frame.pilot_values,
            modulation: self.cfg.modulation,
            punct: &self.punct,
            design: &self.design,
            list_size: self.cfg.list_size,
            crc: self.crc.as_ref(),
        };
        let identity;
        let csi = if pilot_csi {
            CsiMode::Pilots
        } else {
            match &tx.traj {
                Some(traj) => CsiMode::Perfect(traj),
                None => {
                    identity = TapTrajectory::time_invariant(
                        0,
                        &[Complex64::new(1.0, 0.0)],
                        tx.samples.len(),
                    );
                    CsiMode::Perfect(&identity)
                }
            }
        };
        Ok(rx.receive(&tx.samples, tx.n0, csi)?)
    }
}

/// Training-block source drawing from the link's pilotless frame: i.i.d.
/// uniform codeword bits, per-block Es/N0 uniform in dB over the configured
/// range, fresh channel and noise every block. Block `i` of a given seed is
/// always the same block.
pub struct LinkSampler<'a> {
    link: &'a Link,
    snr_min_db: f64,
    snr_max_db: f64,
    seed: u64,
    stream: u64,
    counter: u64,
}

impl<'a> LinkSampler<'a> {
    pub fn new(link: &'a Link, snr_min_db: f64, snr_max_db: f64, seed: u64, stream: u64) -> Self {
        assert!(snr_max_db >= snr_min_db);
        LinkSampler {
            link,
            snr_min_db,
            snr_max_db,
            seed,
            stream,
            counter: 0,
        }
    }
}

impl BlockSampler for LinkSampler<'_> {
    fn n_bits(&self) -> usize {
        self.link.punct.n_bits()
    }

    fn sample(&mut self) -> TrainBlock {
        let mut rng =
            ChaCha8Rng::seed_from_u64(derive_seed(self.seed, self.stream, self.counter));
        self.counter += 1;
        let x = Bits::random(self.n_bits(), &mut rng);
        let snr_db = rng.gen_range(self.snr_min_db..=self.snr_max_db);
        let tx = self
            .link
            .transmit_codeword(&x, snr_db, TxMode::Pilotless, &mut rng);
        TrainBlock {
            x,
            y: self.link.detect(&tx),
            n0: tx.n0,
        }
    }
}
