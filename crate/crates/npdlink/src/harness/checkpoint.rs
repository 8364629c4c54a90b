//! Binary checkpoint format for decoder parameters.
//!
//! Layout: the magic bytes `NPDC`, one version byte, an ASCII header of
//! `key = value` lines ending in a blank line, then every parameter as a
//! little-endian `f64` in canonical order (E, e_co, F, G, H; each network
//! layer by layer, weights row-major before biases). The header records the
//! network sizes twice: the four scalars `d`, `h`, `m`, `depth`, and the full
//! layer chain of every network. Loading rebuilds the networks from the
//! scalars and refuses the file if the chains disagree, so a truncated or
//! hand-edited header cannot silently misalign the weight stream.

use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

use crate::npd::{NpdDims, NpdParams};

const MAGIC: &[u8; 4] = b"NPDC";
const VERSION: u8 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("not a checkpoint file (bad magic)")]
    BadMagic,
    #[error("unsupported checkpoint version {0}")]
    BadVersion(u8),
    #[error("malformed header: {0}")]
    Header(String),
    #[error("header is inconsistent: {0}")]
    DimMismatch(String),
    #[error("file ends before the parameter stream is complete")]
    Truncated,
    #[error("file continues past the parameter stream")]
    TrailingData,
    #[error("cannot access checkpoint: {0}")]
    Io(#[from] std::io::Error),
}

/// Serializes parameters to the checkpoint byte format.
pub fn encode(params: &NpdParams) -> Vec<u8> {
    let chain = |dims: Vec<usize>| {
        dims.iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join(" ")
    };
    let mut header = String::new();
    let _ = writeln!(header, "d = {}", params.dims.d);
    let _ = writeln!(header, "h = {}", params.dims.h);
    let _ = writeln!(header, "m = {}", params.dims.m);
    let _ = writeln!(header, "depth = {}", params.dims.depth);
    let _ = writeln!(header, "e = {}", chain(params.e.dims()));
    let _ = writeln!(header, "e_co = {}", params.e_co.len());
    let _ = writeln!(header, "f = {}", chain(params.f.dims()));
    let _ = writeln!(header, "g = {}", chain(params.g.dims()));
    let _ = writeln!(header, "h_head = {}", chain(params.h_head.dims()));

    let mut flat = Vec::with_capacity(params.n_params());
    params.write_params(&mut flat);

    let mut out = Vec::with_capacity(5 + header.len() + 1 + flat.len() * 8);
    out.extend_from_slice(MAGIC);
    out.push(VERSION);
    out.extend_from_slice(header.as_bytes());
    out.push(b'\n');
    for v in flat {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

struct Header {
    dims: NpdDims,
    e: Vec<usize>,
    e_co: usize,
    f: Vec<usize>,
    g: Vec<usize>,
    h_head: Vec<usize>,
}

fn parse_header(text: &str) -> Result<Header, CheckpointError> {
    let bad = |msg: String| CheckpointError::Header(msg);
    let mut scalar = std::collections::BTreeMap::new();
    let mut chains = std::collections::BTreeMap::new();
    for line in text.lines() {
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| bad(format!("expected `key = value`, got {line:?}")))?;
        let key = key.trim();
        let value = value.trim();
        let parsed: Result<Vec<usize>, _> = value
            .split_whitespace()
            .map(|f| f.parse::<usize>())
            .collect();
        let parsed = parsed.map_err(|e| bad(format!("{key}: {e}")))?;
        match key {
            "d" | "h" | "m" | "depth" | "e_co" => {
                if parsed.len() != 1 {
                    return Err(bad(format!("{key} must be a single integer")));
                }
                scalar.insert(key.to_string(), parsed[0]);
            }
            "e" | "f" | "g" | "h_head" => {
                if parsed.len() < 2 {
                    return Err(bad(format!("{key} chain needs at least two sizes")));
                }
                chains.insert(key.to_string(), parsed);
            }
            other => return Err(bad(format!("unknown header key {other:?}"))),
        }
    }
    let mut need_scalar = |k: &str| {
        scalar
            .remove(k)
            .ok_or_else(|| bad(format!("missing header key {k:?}")))
    };
    let dims = NpdDims {
        d: need_scalar("d")?,
        h: need_scalar("h")?,
        m: need_scalar("m")?,
        depth: need_scalar("depth")?,
    };
    let e_co = need_scalar("e_co")?;
    if dims.d == 0 || dims.h == 0 || dims.depth == 0 || !(dims.m == 1 || dims.m == 2) {
        return Err(bad(format!("unusable network sizes {dims:?}")));
    }
    let mut need_chain = |k: &str| {
        chains
            .remove(k)
            .ok_or_else(|| bad(format!("missing header key {k:?}")))
    };
    Ok(Header {
        dims,
        e: need_chain("e")?,
        e_co,
        f: need_chain("f")?,
        g: need_chain("g")?,
        h_head: need_chain("h_head")?,
    })
}

/// Parses checkpoint bytes back into parameters.
pub fn decode(bytes: &[u8]) -> Result<NpdParams, CheckpointError> {
    if bytes.len() < MAGIC.len() || &bytes[..MAGIC.len()] != MAGIC {
        return Err(CheckpointError::BadMagic);
    }
    if bytes.len() < MAGIC.len() + 1 {
        return Err(CheckpointError::Truncated);
    }
    let version = bytes[MAGIC.len()];
    if version != VERSION {
        return Err(CheckpointError::BadVersion(version));
    }
    let body = &bytes[MAGIC.len() + 1..];
    let sep = body
        .windows(2)
        .position(|w| w == b"\n\n")
        .ok_or_else(|| CheckpointError::Header("missing blank line after header".into()))?;
    let header_text = std::str::from_utf8(&body[..sep])
        .map_err(|_| CheckpointError::Header("header is not ASCII".into()))?;
    let header = parse_header(header_text)?;

    let mut params = NpdParams::new(header.dims, 0);
    let mismatch = |what: &str, expect: &[usize], got: &[usize]| {
        Err(CheckpointError::DimMismatch(format!(
            "{what} chain {got:?} does not match sizes implied by d/h/m/depth {expect:?}"
        )))
    };
    if params.e.dims() != header.e {
        return mismatch("e", &params.e.dims(), &header.e);
    }
    if params.e_co.len() != header.e_co {
        return mismatch("e_co", &[params.e_co.len()], &[header.e_co]);
    }
    if params.f.dims() != header.f {
        return mismatch("f", &params.f.dims(), &header.f);
    }
    if params.g.dims() != header.g {
        return mismatch("g", &params.g.dims(), &header.g);
    }
    if params.h_head.dims() != header.h_head {
        return mismatch("h_head", &params.h_head.dims(), &header.h_head);
    }

    let stream = &body[sep + 2..];
    let expected = params.n_params() * 8;
    match stream.len().cmp(&expected) {
        std::cmp::Ordering::Less => return Err(CheckpointError::Truncated),
        std::cmp::Ordering::Greater => return Err(CheckpointError::TrailingData),
        std::cmp::Ordering::Equal => {}
    }
    let mut values = stream
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()));
    params.read_params(&mut values);
    Ok(params)
}

pub fn save(params: &NpdParams, path: &Path) -> Result<(), CheckpointError> {
    Ok(std::fs::write(path, encode(params))?)
}

pub fn load(path: &Path) -> Result<NpdParams, CheckpointError> {
    decode(&std::fs::read(path)?)
}
