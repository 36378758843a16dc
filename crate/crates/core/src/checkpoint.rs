//! Binary checkpoint format.
//!
//! ```text
//! "STC1"
//! u32 LE   header length in bytes
//! [u8]     UTF-8 JSON header: dims, architecture, channel stats, training config, seed
//! repeated, in parameter declaration order:
//!   u32 LE   name length
//!   [u8]     UTF-8 parameter name
//!   u64 LE   element count
//!   [f64 LE] values
//! ```

use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, StcError};
use crate::model::{Architecture, DataDims, StcModel};
use crate::nn::Parameters;
use crate::symbolize::ChannelStats;
use crate::trainer::{Pretrained, TrainConfig};

pub const MAGIC: &[u8; 4] = b"STC1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Header {
    dims: DataDims,
    architecture: Architecture,
    stats: ChannelStats,
    config: TrainConfig,
    seed: u64,
}

pub fn encode_checkpoint(p: &Pretrained) -> Result<Vec<u8>> {
    let header = Header {
        dims: p.model.dims,
        architecture: p.model.arch.clone(),
        stats: p.stats.clone(),
        config: p.config.clone(),
        seed: p.config.seed,
    };
    let json = serde_json::to_vec(&header).map_err(|e| StcError::Checkpoint(e.to_string()))?;
    let tensors = p.model.named_tensors();
    let payload: usize = tensors.iter().map(|(n, t)| 12 + n.len() + 8 * t.len()).sum();
    let mut out = Vec::with_capacity(8 + json.len() + payload);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(json.len() as u32).to_le_bytes());
    out.extend_from_slice(&json);
    for (name, t) in tensors {
        out.extend_from_slice(&(name.len() as u32).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        out.extend_from_slice(&(t.len() as u64).to_le_bytes());
        for v in t {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| StcError::Checkpoint(format!("truncated while reading {what}")))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }
}

fn check_arch(dims: &DataDims, arch: &Architecture) -> Result<()> {
    let widths = [dims.channels, dims.length, dims.n_symbols, arch.h_dim, arch.z_dim];
    if widths.contains(&0) || arch.hidden.contains(&0) || arch.proj_hidden.contains(&0) {
        return Err(StcError::Checkpoint("header declares a zero-width layer".into()));
    }
    // Refuse to allocate absurd models from a corrupt header.
    let mut total: u128 = 0;
    let mut add_chain = |input: usize, hidden: &[usize], output: usize| {
        let mut prev = input as u128;
        for &w in hidden.iter().chain(std::iter::once(&output)) {
            total += prev * w as u128 + w as u128;
            prev = w as u128;
        }
    };
    add_chain(dims.channels.saturating_mul(dims.length), &arch.hidden, arch.h_dim);
    add_chain(dims.channels.saturating_mul(dims.n_symbols), &arch.hidden, arch.h_dim);
    add_chain(arch.h_dim, &arch.proj_hidden, arch.z_dim);
    add_chain(arch.h_dim, &arch.proj_hidden, arch.z_dim);
    if total > (1u128 << 31) {
        return Err(StcError::Checkpoint(format!("header declares {total} parameters")));
    }
    Ok(())
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<Pretrained> {
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        return Err(StcError::Checkpoint("not an STC checkpoint".into()));
    }
    let mut cur = Cursor { buf: bytes, pos: 4 };
    let header_len = cur.u32("header length")? as usize;
    let header: Header = serde_json::from_slice(cur.take(header_len, "header")?)
        .map_err(|e| StcError::Checkpoint(format!("bad header: {e}")))?;
    check_arch(&header.dims, &header.architecture)?;
    let stats = ChannelStats::new(header.stats.mean, header.stats.sigma)
        .map_err(|e| StcError::Checkpoint(format!("bad channel stats: {e}")))?;
    if stats.channels() != header.dims.channels {
        return Err(StcError::Checkpoint(format!(
            "stats cover {} channels, model expects {}",
            stats.channels(),
            header.dims.channels
        )));
    }
    if header.config.n_symbols != header.dims.n_symbols || header.config.seed != header.seed {
        return Err(StcError::Checkpoint("header config disagrees with dims/seed".into()));
    }

    let mut model = StcModel::new(header.dims, header.architecture, &mut ChaCha8Rng::seed_from_u64(0))
        .map_err(|e| StcError::Checkpoint(e.to_string()))?;
    let expected: Vec<(String, usize)> = model
        .named_tensors()
        .into_iter()
        .map(|(n, t)| (n, t.len()))
        .collect();
    for ((name, len), dst) in expected.iter().zip(model.tensors_mut()) {
        let name_len = cur.u32("parameter name length")? as usize;
        let got = cur.take(name_len, "parameter name")?;
        if got != name.as_bytes() {
            return Err(StcError::Checkpoint(format!(
                "expected parameter {name}, found {:?}",
                String::from_utf8_lossy(got)
            )));
        }
        let count = cur.u64("element count")?;
        if count != *len as u64 {
            return Err(StcError::Checkpoint(format!(
                "parameter {name} has {count} values, architecture needs {len}"
            )));
        }
        let raw = cur.take(len * 8, name)?;
        for (v, chunk) in dst.iter_mut().zip(raw.chunks_exact(8)) {
            *v = f64::from_le_bytes(chunk.try_into().unwrap());
            if !v.is_finite() {
                return Err(StcError::Checkpoint(format!("parameter {name} holds a non-finite value")));
            }
        }
    }
    if cur.pos != bytes.len() {
        return Err(StcError::Checkpoint(format!(
            "{} trailing bytes after parameters",
            bytes.len() - cur.pos
        )));
    }
    Pretrained::new(model, stats, header.config).map_err(|e| StcError::Checkpoint(e.to_string()))
}

pub fn save_checkpoint(p: &Pretrained, path: &Path) -> Result<()> {
    fs::write(path, encode_checkpoint(p)?).map_err(|e| StcError::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<Pretrained> {
    let bytes = fs::read(path).map_err(|e| StcError::io(path, e))?;
    decode_checkpoint(&bytes)
}
