//! Flat `key = value` configuration files and the code-design file format.
//!
//! One key per line, `#` starts a comment, blank lines are ignored. Unknown
//! and duplicate keys are errors so typos cannot silently fall back to a
//! default. [`Config::parse_str`] fills every omitted key with its default;
//! [`Config::echo`] renders the effective configuration back in the same
//! syntax so runs can log exactly what they used.
//!
//! The SNR sweep accepts comma-separated entries, each either a single value
//! or an inclusive `start:step:stop` range: `snr_db = -4:1:2` expands to
//! seven points.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::polar::{CodeDesign, FrozenFill};
use crate::waveform::pilots::PilotPattern;
use crate::waveform::Modulation;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: expected `key = value`, got {got:?}")]
    Syntax { line: usize, got: String },
    #[error("line {line}: unknown key {key:?}")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: duplicate key {key:?}")]
    DuplicateKey { line: usize, key: String },
    #[error("missing required key {0:?}")]
    MissingKey(&'static str),
    #[error("bad value for {key}: {reason}")]
    BadValue { key: String, reason: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

/// Transmission scheme the link runs on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Waveform {
    Ofdm,
    SingleCarrier,
}

impl Waveform {
    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ofdm" => Some(Waveform::Ofdm),
            "single_carrier" => Some(Waveform::SingleCarrier),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Waveform::Ofdm => "ofdm",
            Waveform::SingleCarrier => "single_carrier",
        }
    }
}

/// Amplifier nonlinearity settings (smoothness and input backoff).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RappConfig {
    pub p: f64,
    pub ibo_db: f64,
}

/// Everything that defines the physical link and the code running over it.
#[derive(Clone, Debug)]
pub struct LinkConfig {
    /// Block length `N` (power of two).
    pub n_bits: usize,
    /// Transmitted codeword bits after puncturing, `N_r <= N`.
    pub n_transmit: usize,
    /// Payload bits per block.
    pub k: usize,
    /// CRC bits appended to the payload (0, 6, or 11).
    pub crc_len: usize,
    /// List size of the list decoders.
    pub list_size: usize,
    /// Generator convention of the code.
    pub bit_reversal: bool,
    pub waveform: Waveform,
    pub modulation: Modulation,
    /// OFDM FFT size.
    pub subcarriers: usize,
    /// Cyclic prefix length in samples (OFDM only).
    pub cp_len: usize,
    /// Pilot pattern of the classical receiver; the neural decoder always
    /// runs pilotless.
    pub pilot_pattern: PilotPattern,
    pub subcarrier_spacing_hz: f64,
    /// Single-carrier oversampling factor.
    pub oversample: usize,
    /// Power-delay profile: `awgn` (no multipath), a bundled TDL name, or a
    /// path to a profile file.
    pub profile: String,
    pub delay_spread_ns: f64,
    /// Mobile speed range in m/s; each block draws uniformly from it.
    pub velocity_min_m_s: f64,
    pub velocity_max_m_s: f64,
    pub carrier_hz: f64,
    /// Amplifier model; `None` is a perfectly linear amplifier.
    pub rapp: Option<RappConfig>,
    /// Evaluation SNR sweep, Es/N0 in dB.
    pub snr_db: Vec<f64>,
    /// Root seed every derived stream mixes from.
    pub seed: u64,
}

impl LinkConfig {
    pub fn bits_per_symbol(&self) -> usize {
        self.modulation.bits_per_symbol()
    }

    /// Occupied bandwidth, which is also the channel-tap sample rate for
    /// OFDM; single-carrier signals are realized at `oversample` times it.
    pub fn bandwidth_hz(&self) -> f64 {
        self.subcarriers as f64 * self.subcarrier_spacing_hz
    }

    /// Cyclic prefix duration; zero for single-carrier.
    pub fn cp_seconds(&self) -> f64 {
        match self.waveform {
            Waveform::Ofdm => self.cp_len as f64 / self.bandwidth_hz(),
            Waveform::SingleCarrier => 0.0,
        }
    }
}

/// Optimizer and network settings for the training and design stages.
#[derive(Clone, Copy, Debug)]
pub struct TrainSettings {
    pub iters: usize,
    pub batch: usize,
    pub lr: f64,
    /// Per-block training SNR is drawn uniformly (in dB) from this range.
    pub snr_min_db: f64,
    pub snr_max_db: f64,
    /// Embedding width per bit.
    pub d: usize,
    /// Hidden width of every network.
    pub h: usize,
    /// Hidden layers per network.
    pub depth: usize,
    /// Loss-trace period in iterations (0: final point only).
    pub log_every: usize,
    /// Blocks used by the mutual-information estimate of the design stage.
    pub design_blocks: usize,
}

/// Monte-Carlo stopping rule: a SNR point ends after this many block errors
/// or this many blocks, whichever comes first.
#[derive(Clone, Copy, Debug)]
pub struct StopRule {
    pub min_block_errors: u64,
    pub max_blocks: u64,
}

impl Default for StopRule {
    fn default() -> Self {
        StopRule {
            min_block_errors: 50,
            max_blocks: 100_000,
        }
    }
}

/// File locations the command-line stages read and write.
#[derive(Clone, Debug)]
pub struct RunPaths {
    pub checkpoint: PathBuf,
    pub design_file: PathBuf,
    pub out_dir: PathBuf,
}

/// A parsed configuration: link, training, stopping rule, and paths.
#[derive(Clone, Debug)]
pub struct Config {
    pub link: LinkConfig,
    pub train: TrainSettings,
    pub stop: StopRule,
    pub paths: RunPaths,
}

struct Raw {
    entries: BTreeMap<String, String>,
    lines: BTreeMap<String, usize>,
}

impl Raw {
    fn take(&mut self, key: &str) -> Option<String> {
        self.entries.remove(key)
    }

    /// Errors on the first key nothing consumed, with its source line.
    fn reject_leftovers(&self) -> Result<(), ConfigError> {
        match self.entries.keys().next() {
            None => Ok(()),
            Some(key) => Err(ConfigError::UnknownKey {
                line: self.lines.get(key).copied().unwrap_or(0),
                key: key.clone(),
            }),
        }
    }

    fn parse<T: std::str::FromStr>(&mut self, key: &str, default: T) -> Result<T, ConfigError>
    where
        T::Err: std::fmt::Display,
    {
        match self.take(key) {
            None => Ok(default),
            Some(v) => v.parse::<T>().map_err(|e| ConfigError::BadValue {
                key: key.into(),
                reason: e.to_string(),
            }),
        }
    }

    fn parse_required<T: std::str::FromStr>(&mut self, key: &'static str) -> Result<T, ConfigError>
    where
        T::Err: std::fmt::Display,
    {
        match self.take(key) {
            None => Err(ConfigError::MissingKey(key)),
            Some(v) => v.parse::<T>().map_err(|e| ConfigError::BadValue {
                key: key.into(),
                reason: e.to_string(),
            }),
        }
    }

    fn parse_bool(&mut self, key: &str, default: bool) -> Result<bool, ConfigError> {
        match self.take(key).as_deref() {
            None => Ok(default),
            Some("true") => Ok(true),
            Some("false") => Ok(false),
            Some(other) => Err(ConfigError::BadValue {
                key: key.into(),
                reason: format!("expected true or false, got {other:?}"),
            }),
        }
    }

    fn parse_with<T>(
        &mut self,
        key: &str,
        default: T,
        f: impl FnOnce(&str) -> Result<T, String>,
    ) -> Result<T, ConfigError> {
        match self.take(key) {
            None => Ok(default),
            Some(v) => f(&v).map_err(|reason| ConfigError::BadValue {
                key: key.into(),
                reason,
            }),
        }
    }
}

/// Splits the flat `key = value` text into a map, rejecting syntax errors
/// and duplicates. Key order does not matter.
fn raw_entries(text: &str) -> Result<Raw, ConfigError> {
    let mut entries = BTreeMap::new();
    let mut lines: BTreeMap<String, usize> = BTreeMap::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let line = raw_line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(ConfigError::Syntax {
                line: idx + 1,
                got: line.to_string(),
            });
        };
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        if key.is_empty() || value.is_empty() {
            return Err(ConfigError::Syntax {
                line: idx + 1,
                got: line.to_string(),
            });
        }
        if entries.insert(key.clone(), value).is_some() {
            return Err(ConfigError::DuplicateKey { line: idx + 1, key });
        }
        lines.insert(key, idx + 1);
    }
    Ok(Raw { entries, lines })
}

/// Expands the SNR list syntax. ASCII hyphens and U+2212 minus signs are
/// both accepted.
fn parse_snr_list(s: &str) -> Result<Vec<f64>, String> {
    let s = s.replace('\u{2212}', "-");
    let mut out = Vec::new();
    for part in s.split(',') {
        let part = part.trim();
        let fields: Vec<&str> = part.split(':').collect();
        let num = |field: &str| -> Result<f64, String> {
            field
                .trim()
                .parse::<f64>()
                .map_err(|e| format!("{field:?}: {e}"))
        };
        match fields.as_slice() {
            [one] => out.push(num(one)?),
            [start, step, stop] => {
                let (a, d, b) = (num(start)?, num(step)?, num(stop)?);
                if d <= 0.0 {
                    return Err(format!("range step must be positive, got {d}"));
                }
                if b < a {
                    return Err(format!("range stop {b} is below start {a}"));
                }
                let count = ((b - a) / d + 1e-9).floor() as usize;
                for i in 0..=count {
                    out.push(a + i as f64 * d);
                }
            }
            _ => return Err(format!("{part:?}: expected a value or start:step:stop")),
        }
    }
    if out.is_empty() {
        return Err("empty list".into());
    }
    Ok(out)
}

impl Config {
    pub fn parse_file(path: &Path) -> Result<Config, ConfigError> {
        Config::parse_str(&std::fs::read_to_string(path)?)
    }

    /// Parses and validates a configuration, filling defaults for every
    /// omitted key. Only `n` and `k` are required.
    pub fn parse_str(text: &str) -> Result<Config, ConfigError> {
        let mut raw = raw_entries(text)?;

        let n_bits: usize = raw.parse_required("n")?;
        let k: usize = raw.parse_required("k")?;
        let n_transmit = raw.parse("n_transmit", n_bits)?;
        let crc_len = raw.parse("crc_len", 0usize)?;
        let list_size = raw.parse("list_size", 1usize)?;
        let bit_reversal = raw.parse_bool("bit_reversal", true)?;
        let waveform = raw.parse_with("waveform", Waveform::Ofdm, |v| {
            Waveform::parse(v).ok_or_else(|| format!("unknown waveform {v:?}"))
        })?;
        let modulation = raw.parse_with("modulation", Modulation::Bpsk, |v| {
            Modulation::parse(v).ok_or_else(|| format!("unknown modulation {v:?}"))
        })?;
        let m = modulation.bits_per_symbol();
        let default_subcarriers = (n_transmit / m).max(1);
        let subcarriers = raw.parse("subcarriers", default_subcarriers)?;
        let cp_len = raw.parse("cp_len", 0usize)?;
        let pilot_pattern = raw.parse_with("pilot_pattern", PilotPattern::OneFull, |v| {
            PilotPattern::parse(v).ok_or_else(|| format!("unknown pilot pattern {v:?}"))
        })?;
        let subcarrier_spacing_hz = raw.parse("subcarrier_spacing_hz", 15_000.0f64)?;
        let oversample = raw.parse("oversample", 1usize)?;
        let profile = raw
            .take("profile")
            .unwrap_or_else(|| "awgn".to_string());
        let delay_spread_ns = raw.parse("delay_spread_ns", 100.0f64)?;
        let velocity_min_m_s = raw.parse("velocity_min_m_s", 0.0f64)?;
        let velocity_max_m_s = raw.parse("velocity_max_m_s", velocity_min_m_s)?;
        let carrier_hz = raw.parse("carrier_hz", 3.5e9f64)?;
        let rapp_on = raw.parse_with("rapp", false, |v| match v {
            "off" => Ok(false),
            "on" => Ok(true),
            other => Err(format!("expected on or off, got {other:?}")),
        })?;
        let rapp_p = raw.parse("rapp_p", crate::channel::rapp::RAPP_SMOOTHNESS)?;
        let rapp_ibo_db = raw.parse("rapp_ibo_db", 6.0f64)?;
        let snr_db = raw.parse_with("snr_db", vec![0.0, 2.0, 4.0, 6.0, 8.0, 10.0], |v| {
            parse_snr_list(v)
        })?;
        let seed = raw.parse("seed", 1u64)?;

        let train = TrainSettings {
            iters: raw.parse("train_iters", 20_000usize)?,
            batch: raw.parse("train_batch", 32usize)?,
            lr: raw.parse("train_lr", 1e-3f64)?,
            snr_min_db: raw.parse("train_snr_min_db", -5.0f64)?,
            snr_max_db: raw.parse("train_snr_max_db", 15.0f64)?,
            d: raw.parse("d", 16usize)?,
            h: raw.parse("h", 64usize)?,
            depth: raw.parse("depth", 1usize)?,
            log_every: raw.parse("log_every", 100usize)?,
            design_blocks: raw.parse("design_blocks", 1024usize)?,
        };
        let stop = StopRule {
            min_block_errors: raw.parse("min_block_errors", 50u64)?,
            max_blocks: raw.parse("max_blocks", 100_000u64)?,
        };
        let paths = RunPaths {
            checkpoint: PathBuf::from(raw.take("checkpoint").unwrap_or_else(|| "npd.ckpt".into())),
            design_file: PathBuf::from(raw.take("design_file").unwrap_or_else(|| "design.txt".into())),
            out_dir: PathBuf::from(raw.take("out_dir").unwrap_or_else(|| ".".into())),
        };

        raw.reject_leftovers()?;

        let cfg = Config {
            link: LinkConfig {
                n_bits,
                n_transmit,
                k,
                crc_len,
                list_size,
                bit_reversal,
                waveform,
                modulation,
                subcarriers,
                cp_len,
                pilot_pattern,
                subcarrier_spacing_hz,
                oversample,
                profile,
                delay_spread_ns,
                velocity_min_m_s,
                velocity_max_m_s,
                carrier_hz,
                rapp: rapp_on.then_some(RappConfig {
                    p: rapp_p,
                    ibo_db: rapp_ibo_db,
                }),
                snr_db,
                seed,
            },
            train,
            stop,
            paths,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        let l = &self.link;
        let fail = |msg: String| Err(ConfigError::Invalid(msg));
        if !l.n_bits.is_power_of_two() {
            return fail(format!("n must be a power of two, got {}", l.n_bits));
        }
        if l.k + l.crc_len > l.n_bits {
            return fail(format!(
                "k + crc_len = {} exceeds n = {}",
                l.k + l.crc_len,
                l.n_bits
            ));
        }
        if l.n_transmit == 0 || l.n_transmit > l.n_bits {
            return fail(format!(
                "n_transmit must be in 1..=n, got {}",
                l.n_transmit
            ));
        }
        let m = l.bits_per_symbol();
        if !l.n_transmit.is_multiple_of(m) {
            return fail(format!(
                "n_transmit = {} does not cover whole {}-bit symbols",
                l.n_transmit,
                m
            ));
        }
        if !(l.crc_len == 0 || l.crc_len == 6 || l.crc_len == 11) {
            return fail(format!("crc_len must be 0, 6, or 11, got {}", l.crc_len));
        }
        if l.list_size == 0 {
            return fail("list_size must be at least 1".into());
        }
        if l.snr_db.is_empty() {
            return fail("snr_db must not be empty".into());
        }
        if l.subcarriers == 0 || l.oversample == 0 {
            return fail("subcarriers and oversample must be at least 1".into());
        }
        if l.waveform == Waveform::Ofdm && l.oversample > 1 {
            return fail("oversample applies to the single_carrier waveform only".into());
        }
        if l.waveform == Waveform::SingleCarrier && l.cp_len > 0 {
            return fail("cp_len applies to the ofdm waveform only".into());
        }
        if l.subcarrier_spacing_hz <= 0.0 || l.carrier_hz <= 0.0 {
            return fail("subcarrier_spacing_hz and carrier_hz must be positive".into());
        }
        if l.delay_spread_ns < 0.0 {
            return fail("delay_spread_ns must be nonnegative".into());
        }
        if l.velocity_min_m_s < 0.0 || l.velocity_max_m_s < l.velocity_min_m_s {
            return fail("velocity range must satisfy 0 <= min <= max".into());
        }
        if let Some(r) = &l.rapp {
            if r.p <= 0.0 {
                return fail("rapp_p must be positive".into());
            }
        }
        let t = &self.train;
        if t.iters == 0 || t.batch == 0 || t.d == 0 || t.h == 0 || t.depth == 0 {
            return fail("train_iters, train_batch, d, h, depth must be at least 1".into());
        }
        if t.lr <= 0.0 {
            return fail("train_lr must be positive".into());
        }
        if t.snr_max_db < t.snr_min_db {
            return fail("train_snr_max_db must not be below train_snr_min_db".into());
        }
        if t.design_blocks == 0 {
            return fail("design_blocks must be at least 1".into());
        }
        if self.stop.min_block_errors == 0 || self.stop.max_blocks == 0 {
            return fail("min_block_errors and max_blocks must be at least 1".into());
        }
        Ok(())
    }

    /// Renders the effective configuration, defaults included, in the input
    /// syntax. Parsing the result reproduces this configuration.
    pub fn echo(&self) -> String {
        let l = &self.link;
        let t = &self.train;
        let mut s = String::new();
        let snr: Vec<String> = l.snr_db.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(s, "n = {}", l.n_bits);
        let _ = writeln!(s, "n_transmit = {}", l.n_transmit);
        let _ = writeln!(s, "k = {}", l.k);
        let _ = writeln!(s, "crc_len = {}", l.crc_len);
        let _ = writeln!(s, "list_size = {}", l.list_size);
        let _ = writeln!(s, "bit_reversal = {}", l.bit_reversal);
        let _ = writeln!(s, "waveform = {}", l.waveform.name());
        let _ = writeln!(s, "modulation = {}", l.modulation.name());
        let _ = writeln!(s, "subcarriers = {}", l.subcarriers);
        let _ = writeln!(s, "cp_len = {}", l.cp_len);
        let _ = writeln!(s, "pilot_pattern = {}", l.pilot_pattern.name());
        let _ = writeln!(s, "subcarrier_spacing_hz = {}", l.subcarrier_spacing_hz);
        let _ = writeln!(s, "oversample = {}", l.oversample);
        let _ = writeln!(s, "profile = {}", l.profile);
        let _ = writeln!(s, "delay_spread_ns = {}", l.delay_spread_ns);
        let _ = writeln!(s, "velocity_min_m_s = {}", l.velocity_min_m_s);
        let _ = writeln!(s, "velocity_max_m_s = {}", l.velocity_max_m_s);
        let _ = writeln!(s, "carrier_hz = {}", l.carrier_hz);
        let _ = writeln!(s, "rapp = {}", if l.rapp.is_some() { "on" } else { "off" });
        if let Some(r) = &l.rapp {
            let _ = writeln!(s, "rapp_p = {}", r.p);
            let _ = writeln!(s, "rapp_ibo_db = {}", r.ibo_db);
        }
        let _ = writeln!(s, "snr_db = {}", snr.join(","));
        let _ = writeln!(s, "seed = {}", l.seed);
        let _ = writeln!(s, "train_iters = {}", t.iters);
        let _ = writeln!(s, "train_batch = {}", t.batch);
        let _ = writeln!(s, "train_lr = {}", t.lr);
        let _ = writeln!(s, "train_snr_min_db = {}", t.snr_min_db);
        let _ = writeln!(s, "train_snr_max_db = {}", t.snr_max_db);
        let _ = writeln!(s, "d = {}", t.d);
        let _ = writeln!(s, "h = {}", t.h);
        let _ = writeln!(s, "depth = {}", t.depth);
        let _ = writeln!(s, "log_every = {}", t.log_every);
        let _ = writeln!(s, "design_blocks = {}", t.design_blocks);
        let _ = writeln!(s, "min_block_errors = {}", self.stop.min_block_errors);
        let _ = writeln!(s, "max_blocks = {}", self.stop.max_blocks);
        let _ = writeln!(s, "checkpoint = {}", self.paths.checkpoint.display());
        let _ = writeln!(s, "design_file = {}", self.paths.design_file.display());
        let _ = writeln!(s, "out_dir = {}", self.paths.out_dir.display());
        s
    }
}

/// Writes a code design as a small `key = value` file (same syntax as
/// configs), with the information set as an ascending comma list.
pub fn write_design(design: &CodeDesign, path: &Path) -> std::io::Result<()> {
    let mut s = String::new();
    let _ = writeln!(s, "n = {}", design.n_bits());
    let _ = writeln!(s, "k = {}", design.k());
    let _ = writeln!(s, "crc_len = {}", design.crc_len());
    let _ = writeln!(s, "bit_reversal = {}", design.include_bit_reversal);
    let fill = match design.frozen_fill {
        FrozenFill::AllZeros => "zeros".to_string(),
        FrozenFill::Seeded(seed) => format!("seeded:{seed}"),
    };
    let _ = writeln!(s, "frozen_fill = {fill}");
    let set: Vec<String> = design.info_set().iter().map(|i| i.to_string()).collect();
    let _ = writeln!(s, "info_set = {}", set.join(","));
    std::fs::write(path, s)
}

/// Reads a design file written by [`write_design`].
pub fn read_design(path: &Path) -> Result<CodeDesign, ConfigError> {
    let text = std::fs::read_to_string(path)?;
    let mut raw = raw_entries(&text)?;
    let n_bits: usize = raw.parse_required("n")?;
    let k: usize = raw.parse_required("k")?;
    let crc_len: usize = raw.parse("crc_len", 0usize)?;
    let bit_reversal = raw.parse_bool("bit_reversal", true)?;
    let fill = raw.parse_with("frozen_fill", FrozenFill::AllZeros, |v| {
        if v == "zeros" {
            Ok(FrozenFill::AllZeros)
        } else if let Some(seed) = v.strip_prefix("seeded:") {
            seed.parse::<u64>()
                .map(FrozenFill::Seeded)
                .map_err(|e| format!("bad seed: {e}"))
        } else {
            Err(format!("expected zeros or seeded:<u64>, got {v:?}"))
        }
    })?;
    let info_set = raw.parse_with("info_set", Vec::new(), |v| {
        v.split(',')
            .map(|f| f.trim().parse::<usize>().map_err(|e| format!("{f:?}: {e}")))
            .collect::<Result<Vec<usize>, String>>()
    })?;
    if info_set.len() != k + crc_len {
        return Err(ConfigError::Invalid(format!(
            "info_set has {} entries, expected k + crc_len = {}",
            info_set.len(),
            k + crc_len
        )));
    }
    raw.reject_leftovers()?;
    if info_set.iter().any(|&i| i >= n_bits) {
        return Err(ConfigError::Invalid("info_set entry out of range".into()));
    }
    let mut sorted = info_set.clone();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != info_set.len() {
        return Err(ConfigError::Invalid("info_set has duplicates".into()));
    }
    Ok(CodeDesign::new(n_bits, k, crc_len, info_set, fill, bit_reversal))
}
