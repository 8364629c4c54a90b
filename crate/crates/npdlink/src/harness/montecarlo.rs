//! Monte-Carlo link evaluation: sweeps the configured Es/N0 points, counts
//! bit and block errors against the transmitted payloads, and reports rates
//! plus net throughput.
//!
//! Block `i` of SNR point `j` is generated from `derive_seed(seed, 16 + j,
//! i)` regardless of which decoder is being evaluated, so different decoder
//! runs with the same seed see identical payloads, fading realizations, and
//! noise, and results do not depend on evaluation order.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::bits::Bits;
use crate::harness::config::StopRule;
use crate::harness::link::{Link, LinkError, TxMode};
use crate::harness::{derive_seed, streams};
use crate::npd::NpdParams;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("the neural decoder needs trained parameters")]
    MissingParams,
    #[error("decoder expects {0} bits per symbol but the link maps {1}")]
    SymbolWidthMismatch(usize, usize),
    #[error(transparent)]
    Link(#[from] LinkError),
    #[error("cannot write records: {0}")]
    Csv(#[from] csv::Error),
}

/// Which receiver a sweep evaluates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DecoderKind {
    /// Neural decoder on the pilotless frame.
    Npd,
    /// Classical receiver with pilot-based channel estimation.
    Classic,
    /// Classical receiver fed the true channel (perfect CSI bound).
    ClassicPcsi,
}

impl DecoderKind {
    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "npd" => Some(DecoderKind::Npd),
            "classic" => Some(DecoderKind::Classic),
            "classic-pcsi" => Some(DecoderKind::ClassicPcsi),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            DecoderKind::Npd => "npd",
            DecoderKind::Classic => "classic",
            DecoderKind::ClassicPcsi => "classic-pcsi",
        }
    }
}

/// Error counts and rates of one Es/N0 point.
#[derive(Clone, Copy, Debug)]
pub struct SimRecord {
    pub snr_db: f64,
    pub blocks: u64,
    pub bit_errors: u64,
    pub block_errors: u64,
    pub ber: f64,
    pub bler: f64,
    pub throughput_mbps: f64,
}

/// Net throughput in Mbit/s: `k` payload bits per codeword, one codeword per
/// symbol period `1/scs + T_cp`, discounted by the block error rate.
pub fn throughput_mbps(bler: f64, k: usize, scs_hz: f64, cp_seconds: f64) -> f64 {
    (1.0 - bler) * k as f64 / (1.0 / scs_hz + cp_seconds) / 1e6
}

/// Runs the sweep for one decoder. Each SNR point stops once it has
/// `stop.min_block_errors` block errors or `stop.max_blocks` blocks.
pub fn run(
    link: &Link,
    decoder: DecoderKind,
    params: Option<&NpdParams>,
    stop: &StopRule,
    seed: u64,
) -> Result<Vec<SimRecord>, SimError> {
    let m = link.cfg.modulation.bits_per_symbol();
    let params = match decoder {
        DecoderKind::Npd => {
            let p = params.ok_or(SimError::MissingParams)?;
            if p.dims.m != m {
                return Err(SimError::SymbolWidthMismatch(p.dims.m, m));
            }
            Some(p)
        }
        DecoderKind::Classic | DecoderKind::ClassicPcsi => {
            let frame = link
                .frame(TxMode::Piloted)
                .ok_or(SimError::Link(LinkError::ClassicNeedsOfdm))?;
            if decoder == DecoderKind::Classic && frame.layout.n_pilot_res() == 0 {
                return Err(SimError::Link(LinkError::Estimate(
                    crate::baseline::EstimateError::NoPilots,
                )));
            }
            None
        }
    };
    let mode = match decoder {
        DecoderKind::Npd => TxMode::Pilotless,
        _ => TxMode::Piloted,
    };
    let k = link.cfg.k;

    let mut records = Vec::with_capacity(link.cfg.snr_db.len());
    for (point, &snr_db) in link.cfg.snr_db.iter().enumerate() {
        let stream = streams::MONTECARLO + point as u64;
        let mut blocks = 0u64;
        let mut bit_errors = 0u64;
        let mut block_errors = 0u64;
        while block_errors < stop.min_block_errors && blocks < stop.max_blocks {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, stream, blocks));
            let payload = Bits::random(k, &mut rng);
            let tx = link.transmit(&payload, snr_db, mode, &mut rng);
            let res = match decoder {
                DecoderKind::Npd => link.receive_npd(params.unwrap(), &tx),
                DecoderKind::Classic => link.receive_classic(&tx, true)?,
                DecoderKind::ClassicPcsi => link.receive_classic(&tx, false)?,
            };
            let distance = link.recover_payload(&res).hamming_distance(&payload) as u64;
            bit_errors += distance;
            block_errors += (distance > 0) as u64;
            blocks += 1;
        }
        let bler = block_errors as f64 / blocks as f64;
        records.push(SimRecord {
            snr_db,
            blocks,
            bit_errors,
            block_errors,
            // Empty payloads (fully frozen blocks) carry no bits to err on.
            ber: if k == 0 {
                0.0
            } else {
                bit_errors as f64 / (blocks * k as u64) as f64
            },
            bler,
            throughput_mbps: throughput_mbps(
                bler,
                k,
                link.cfg.subcarrier_spacing_hz,
                link.cfg.cp_seconds(),
            ),
        });
    }
    Ok(records)
}

/// Writes records as CSV with a fixed header.
pub fn write_csv(path: &Path, records: &[SimRecord]) -> Result<(), SimError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "snr_db",
        "blocks",
        "bit_errors",
        "block_errors",
        "ber",
        "bler",
        "throughput_mbps",
    ])?;
    for r in records {
        w.write_record([
            r.snr_db.to_string(),
            r.blocks.to_string(),
            r.bit_errors.to_string(),
            r.block_errors.to_string(),
            r.ber.to_string(),
            r.bler.to_string(),
            r.throughput_mbps.to_string(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::Config;
    use crate::polar::sc::sc_decode;
    use crate::polar::{CodeDesign, FrozenFill};
    use rand::Rng;
    use rand_distr::{Distribution, Normal};
    use tempfile::tempdir;

    /// Binary-erasure Bhattacharyya recursion; good enough to rank synthetic
    /// channels for the test codes here.
    fn bhattacharyya_info_set(n: usize, k: usize) -> Vec<usize> {
        let mut z = vec![0.5f64];
        while z.len() < n {
            let mut next = Vec::with_capacity(z.len() * 2);
            for &v in &z {
                next.push(2.0 * v - v * v);
                next.push(v * v);
            }
            z = next;
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| z[a].partial_cmp(&z[b]).unwrap().then(a.cmp(&b)));
        order.truncate(k);
        order
    }

    fn test_link(text: &str) -> Link {
        let cfg = Config::parse_str(text).unwrap().link;
        let info = bhattacharyya_info_set(cfg.n_bits, cfg.k + cfg.crc_len);
        let design = CodeDesign::new(
            cfg.n_bits,
            cfg.k,
            cfg.crc_len,
            info,
            FrozenFill::AllZeros,
            cfg.bit_reversal,
        );
        Link::new(cfg, design).unwrap()
    }

    #[test]
    fn throughput_matches_the_symbol_period() {
        // 32 payload bits per 15 kHz symbol with no cyclic prefix is
        // exactly 0.48 Mbit/s; a 4.69 us prefix stretches the period.
        assert!((throughput_mbps(0.0, 32, 15_000.0, 0.0) - 0.48).abs() < 1e-12);
        let with_cp = throughput_mbps(0.0, 32, 15_000.0, 4.69e-6);
        assert!((with_cp - 0.44845).abs() < 1e-4, "{with_cp}");
        // Errors discount linearly.
        assert!((throughput_mbps(0.25, 32, 15_000.0, 0.0) - 0.36).abs() < 1e-12);
    }

    #[test]
    fn noiseless_sweep_is_error_free_and_record_fields_are_consistent() {
        let link = test_link("n = 32\nk = 16\nsnr_db = 300\n");
        let stop = StopRule {
            min_block_errors: 10,
            max_blocks: 40,
        };
        let records = run(&link, DecoderKind::ClassicPcsi, None, &stop, 5).unwrap();
        assert_eq!(records.len(), 1);
        let r = &records[0];
        assert_eq!(r.blocks, 40);
        assert_eq!((r.bit_errors, r.block_errors), (0, 0));
        assert_eq!((r.ber, r.bler), (0.0, 0.0));
        let expect = throughput_mbps(0.0, 16, 15_000.0, 0.0);
        assert_eq!(r.throughput_mbps, expect);
    }

    #[test]
    fn rates_follow_their_counts() {
        let link = test_link("n = 32\nk = 16\nsnr_db = -5,0\n");
        let stop = StopRule {
            min_block_errors: 20,
            max_blocks: 200,
        };
        for r in run(&link, DecoderKind::Classic, None, &stop, 7).unwrap() {
            assert!(r.blocks <= 200);
            assert!(r.block_errors >= 20 || r.blocks == 200);
            assert_eq!(r.ber, r.bit_errors as f64 / (r.blocks * 16) as f64);
            assert_eq!(r.bler, r.block_errors as f64 / r.blocks as f64);
            assert!(r.bit_errors >= r.block_errors);
            let expect = throughput_mbps(r.bler, 16, 15_000.0, 0.0);
            assert_eq!(r.throughput_mbps, expect);
        }
    }

    #[test]
    fn early_stop_triggers_on_block_errors() {
        let link = test_link("n = 32\nk = 16\nsnr_db = -10\n");
        let stop = StopRule {
            min_block_errors: 5,
            max_blocks: 10_000,
        };
        let r = &run(&link, DecoderKind::ClassicPcsi, None, &stop, 9).unwrap()[0];
        assert!(r.block_errors >= 5);
        assert!(r.blocks < 1000, "at -10 dB errors should arrive quickly");
    }

    #[test]
    fn same_seed_reproduces_identical_records() {
        let link = test_link(
            "n = 64\nk = 32\nsnr_db = 2,4\nprofile = tdl-a\nvelocity_max_m_s = 10\ncp_len = 8\n",
        );
        let stop = StopRule {
            min_block_errors: 15,
            max_blocks: 300,
        };
        let a = run(&link, DecoderKind::Classic, None, &stop, 11).unwrap();
        let b = run(&link, DecoderKind::Classic, None, &stop, 11).unwrap();
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.blocks, y.blocks);
            assert_eq!(x.bit_errors, y.bit_errors);
            assert_eq!(x.block_errors, y.block_errors);
            assert_eq!(x.ber.to_bits(), y.ber.to_bits());
            assert_eq!(x.bler.to_bits(), y.bler.to_bits());
            assert_eq!(x.throughput_mbps.to_bits(), y.throughput_mbps.to_bits());
        }
        let c = run(&link, DecoderKind::Classic, None, &stop, 12).unwrap();
        assert!(a.iter().zip(&c).any(|(x, y)| x.bit_errors != y.bit_errors));
    }

    #[test]
    fn fully_frozen_blocks_never_err() {
        let link = test_link("n = 16\nk = 0\nsnr_db = 0\n");
        let stop = StopRule {
            min_block_errors: 5,
            max_blocks: 25,
        };
        let r = &run(&link, DecoderKind::ClassicPcsi, None, &stop, 3).unwrap()[0];
        assert_eq!(r.blocks, 25);
        assert_eq!((r.ber, r.bler), (0.0, 0.0));
        assert_eq!(r.throughput_mbps, 0.0);
    }

    #[test]
    fn unusable_decoder_setups_are_rejected() {
        let link = test_link("n = 32\nk = 16\n");
        let stop = StopRule::default();
        assert!(matches!(
            run(&link, DecoderKind::Npd, None, &stop, 1),
            Err(SimError::MissingParams)
        ));

        let sc = test_link("n = 32\nk = 16\nwaveform = single_carrier\n");
        assert!(matches!(
            run(&sc, DecoderKind::Classic, None, &stop, 1),
            Err(SimError::Link(LinkError::ClassicNeedsOfdm))
        ));

        let pilotless = test_link("n = 32\nk = 16\npilot_pattern = none\n");
        assert!(matches!(
            run(&pilotless, DecoderKind::Classic, None, &stop, 1),
            Err(SimError::Link(LinkError::Estimate(_)))
        ));
        // Perfect CSI does not need pilots.
        assert!(run(&pilotless, DecoderKind::ClassicPcsi, None, &stop, 1).is_ok());

        let qpsk = test_link("n = 32\nk = 16\nmodulation = qpsk\n");
        let bpsk_params = NpdParams::new(
            crate::npd::NpdDims {
                d: 4,
                h: 8,
                depth: 1,
                m: 1,
            },
            0,
        );
        assert!(matches!(
            run(&qpsk, DecoderKind::Npd, Some(&bpsk_params), &stop, 1),
            Err(SimError::SymbolWidthMismatch(1, 2))
        ));
    }

    #[test]
    fn csv_output_has_the_pinned_header_and_parseable_rows() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("records.csv");
        let records = vec![
            SimRecord {
                snr_db: -2.5,
                blocks: 128,
                bit_errors: 37,
                block_errors: 9,
                ber: 37.0 / (128.0 * 16.0),
                bler: 9.0 / 128.0,
                throughput_mbps: 0.2231,
            },
            SimRecord {
                snr_db: 0.0,
                blocks: 256,
                bit_errors: 0,
                block_errors: 0,
                ber: 0.0,
                bler: 0.0,
                throughput_mbps: 0.24,
            },
        ];
        write_csv(&path, &records).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "snr_db,blocks,bit_errors,block_errors,ber,bler,throughput_mbps"
        );
        for (line, r) in lines.zip(&records) {
            let fields: Vec<&str> = line.split(',').collect();
            assert_eq!(fields.len(), 7);
            assert_eq!(fields[0].parse::<f64>().unwrap(), r.snr_db);
            assert_eq!(fields[1].parse::<u64>().unwrap(), r.blocks);
            assert_eq!(fields[4].parse::<f64>().unwrap(), r.ber);
            assert_eq!(fields[6].parse::<f64>().unwrap(), r.throughput_mbps);
        }
    }

    /// The full OFDM chain with perfect CSI on a flat channel must match a
    /// first-principles BPSK-AWGN simulation of the same code: independent
    /// modulator, noise, exact LLRs, and plain successive cancellation.
    #[test]
    fn classic_awgn_sweep_matches_a_straight_line_simulation() {
        let link = test_link("n = 128\nk = 64\nsnr_db = -2,-1,0\n");
        let blocks = 5000u64;
        let stop = StopRule {
            min_block_errors: u64::MAX,
            max_blocks: blocks,
        };
        let records = run(&link, DecoderKind::ClassicPcsi, None, &stop, 21).unwrap();

        let design = &link.design;
        let mut rng = ChaCha8Rng::seed_from_u64(904);
        for r in &records {
            let n0 = 10.0f64.powf(-r.snr_db / 10.0);
            let noise = Normal::new(0.0, (n0 / 2.0).sqrt()).unwrap();
            let mut failures = 0u64;
            for _ in 0..blocks {
                let mut info = Bits::zeros(64);
                for b in info.as_mut_slice() {
                    *b = rng.gen_range(0..2u8);
                }
                let x = design.encode_info(&info);
                let llrs: Vec<f64> = x
                    .as_slice()
                    .iter()
                    .map(|&bit| {
                        let s = if bit == 0 { 1.0 } else { -1.0 };
                        let y = s + noise.sample(&mut rng);
                        -4.0 * y / n0
                    })
                    .collect();
                let out = sc_decode(&llrs, design);
                failures += (design.extract_info(&out.u_hat) != info) as u64;
            }
            let oracle_bler = failures as f64 / blocks as f64;
            // Two-proportion z-test at 99%: both estimates draw from the
            // same block error probability.
            let pool = (r.block_errors + failures) as f64 / (2 * blocks) as f64;
            let sigma = (pool * (1.0 - pool) * 2.0 / blocks as f64).sqrt();
            let gap = (r.bler - oracle_bler).abs();
            assert!(
                gap <= 2.58 * sigma + 1e-12,
                "snr {}: chain {} vs oracle {} (sigma {})",
                r.snr_db,
                r.bler,
                oracle_bler,
                sigma
            );
            // The operating points actually exercise the code.
            assert!(r.bler > 0.005 && r.bler < 0.9, "snr {}: {}", r.snr_db, r.bler);
        }
    }

    /// On a frequency-selective channel with sparse pilots, the perfect-CSI
    /// bound must beat least-squares estimation, and by a clear margin;
    /// matched per-block seeds make the comparison paired.
    #[test]
    fn perfect_csi_outperforms_pilot_estimation_on_selective_channels() {
        let link = test_link(
            "n = 64\nk = 32\nsnr_db = 7\nsubcarriers = 64\nsubcarrier_spacing_hz = 60000\n\
             pilot_pattern = 1p2\nprofile = tdl-a\ndelay_spread_ns = 300\ncp_len = 16\n",
        );
        let stop = StopRule {
            min_block_errors: u64::MAX,
            max_blocks: 2000,
        };
        let pcsi = &run(&link, DecoderKind::ClassicPcsi, None, &stop, 31).unwrap()[0];
        let ls = &run(&link, DecoderKind::Classic, None, &stop, 31).unwrap()[0];
        assert_eq!(pcsi.blocks, ls.blocks);
        assert!(
            pcsi.block_errors < ls.block_errors,
            "pcsi {} vs ls {}",
            pcsi.block_errors,
            ls.block_errors
        );
        // Both operate in a regime where the comparison means something.
        assert!(pcsi.bler > 0.001, "pcsi bler {}", pcsi.bler);
        assert!(ls.bler < 0.9, "ls bler {}", ls.bler);
    }
}
