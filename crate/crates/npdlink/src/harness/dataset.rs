//! Exportable training datasets.
//!
//! A dataset is a sequence of training blocks from the pilotless link:
//! i.i.d. uniform codeword bits (the staged objective needs uniform inputs,
//! not valid codewords), the received symbols, and the noise level. Blocks
//! are generated on their own seed stream, so a dataset never overlaps the
//! blocks a training run draws.
//!
//! The file format is one line per block with three tab-separated fields:
//! the codeword bits as a 0/1 string, the noise variance, and the received
//! symbols as space-separated `re,im` pairs. Floats are written in shortest
//! roundtrip form, so read-after-write is bit-exact.

use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;
use thiserror::Error;

use crate::bits::Bits;
use crate::harness::link::{Link, LinkSampler};
use crate::harness::streams;
use crate::npd::train::{BlockSampler, TrainBlock};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("cannot access dataset: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

/// Lazily generates `count` dataset blocks. Block `i` depends only on the
/// link, the SNR range, the seed, and `i`.
pub fn generate<'a>(
    link: &'a Link,
    snr_min_db: f64,
    snr_max_db: f64,
    count: usize,
    seed: u64,
) -> impl Iterator<Item = TrainBlock> + 'a {
    let mut sampler = LinkSampler::new(link, snr_min_db, snr_max_db, seed, streams::DATASET);
    (0..count).map(move |_| sampler.sample())
}

/// Writes blocks in the line format described in the module docs.
pub fn write(path: &Path, blocks: impl Iterator<Item = TrainBlock>) -> Result<usize, DatasetError> {
    let mut out = String::new();
    let mut count = 0;
    for block in blocks {
        for &bit in block.x.as_slice() {
            out.push(if bit == 0 { '0' } else { '1' });
        }
        let _ = write!(out, "\t{:?}\t", block.n0);
        for (i, y) in block.y.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            let _ = write!(out, "{:?},{:?}", y.re, y.im);
        }
        out.push('\n');
        count += 1;
    }
    std::fs::write(path, out)?;
    Ok(count)
}

/// Reads a dataset file back into blocks.
pub fn read(path: &Path) -> Result<Vec<TrainBlock>, DatasetError> {
    let text = std::fs::read_to_string(path)?;
    let mut blocks = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let err = |reason: String| DatasetError::Parse {
            line: idx + 1,
            reason,
        };
        let mut fields = line.split('\t');
        let mut next = |what: &str| {
            fields
                .next()
                .ok_or_else(|| err(format!("missing {what} field")))
        };
        let x = Bits::from_str01(next("bit")?)
            .ok_or_else(|| err("bits must be 0s and 1s".into()))?;
        let n0: f64 = next("noise")?
            .parse()
            .map_err(|e| err(format!("bad noise variance: {e}")))?;
        let y = next("symbol")?
            .split(' ')
            .map(|pair| {
                let (re, im) = pair
                    .split_once(',')
                    .ok_or_else(|| err(format!("symbol {pair:?} is not re,im")))?;
                let re: f64 = re.parse().map_err(|e| err(format!("bad symbol: {e}")))?;
                let im: f64 = im.parse().map_err(|e| err(format!("bad symbol: {e}")))?;
                Ok(Complex64::new(re, im))
            })
            .collect::<Result<Vec<Complex64>, DatasetError>>()?;
        if fields.next().is_some() {
            return Err(err("too many fields".into()));
        }
        blocks.push(TrainBlock { x, n0, y });
    }
    Ok(blocks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::Config;
    use crate::polar::{CodeDesign, FrozenFill};
    use tempfile::tempdir;

    fn test_link(text: &str) -> Link {
        let cfg = Config::parse_str(text).unwrap().link;
        let design = CodeDesign::new(
            cfg.n_bits,
            cfg.k,
            cfg.crc_len,
            (cfg.n_bits - cfg.k..cfg.n_bits).collect(),
            FrozenFill::AllZeros,
            cfg.bit_reversal,
        );
        Link::new(cfg, design).unwrap()
    }

    #[test]
    fn blocks_have_codeword_and_symbol_shapes() {
        let link = test_link("n = 32\nk = 16\nmodulation = qpsk\nn_transmit = 24\n");
        for block in generate(&link, -5.0, 15.0, 16, 3) {
            assert_eq!(block.x.len(), 32);
            assert_eq!(block.y.len(), 12);
            assert!(block.n0 > 0.0);
        }
    }

    #[test]
    fn generation_is_seed_deterministic_and_seed_sensitive() {
        let link = test_link("n = 32\nk = 16\n");
        let a: Vec<TrainBlock> = generate(&link, 0.0, 10.0, 6, 7).collect();
        let b: Vec<TrainBlock> = generate(&link, 0.0, 10.0, 6, 7).collect();
        let c: Vec<TrainBlock> = generate(&link, 0.0, 10.0, 6, 8).collect();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.x, y.x);
            assert_eq!(x.y, y.y);
            assert_eq!(x.n0, y.n0);
        }
        assert!(a.iter().zip(&c).any(|(x, y)| x.x != y.x));
    }

    #[test]
    fn codeword_bits_are_unbiased() {
        let link = test_link("n = 64\nk = 32\n");
        let mut ones = 0usize;
        let mut total = 0usize;
        for block in generate(&link, 0.0, 10.0, 1600, 11) {
            ones += block.x.as_slice().iter().filter(|&&b| b == 1).count();
            total += block.x.len();
        }
        assert!(total >= 100_000);
        let bias = ones as f64 / total as f64;
        assert!((bias - 0.5).abs() < 0.01, "ones fraction {bias}");
    }

    #[test]
    fn file_roundtrip_is_bit_exact() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("blocks.tsv");
        let link = test_link("n = 16\nk = 8\nprofile = tdl-c\nvelocity_max_m_s = 12\n");
        let blocks: Vec<TrainBlock> = generate(&link, -3.0, 9.0, 10, 5).collect();
        let written = write(&path, blocks.iter().cloned()).unwrap();
        assert_eq!(written, 10);
        let back = read(&path).unwrap();
        assert_eq!(back.len(), blocks.len());
        for (a, b) in back.iter().zip(&blocks) {
            assert_eq!(a.x, b.x);
            assert_eq!(a.n0.to_bits(), b.n0.to_bits());
            assert_eq!(a.y.len(), b.y.len());
            for (ya, yb) in a.y.iter().zip(&b.y) {
                assert_eq!(ya.re.to_bits(), yb.re.to_bits());
                assert_eq!(ya.im.to_bits(), yb.im.to_bits());
            }
        }
    }

    #[test]
    fn malformed_lines_are_rejected_with_line_numbers() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("bad.tsv");
        std::fs::write(&path, "0101\t0.5\t1.0,2.0\n01x1\t0.5\t1.0,2.0\n").unwrap();
        match read(&path) {
            Err(DatasetError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }
}
