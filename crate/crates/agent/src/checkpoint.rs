//! Binary checkpoint format.
//!
//! ```text
//! "WBC1" | version u32 | tensor count u32
//! per tensor: name length u16 | UTF-8 name | rank u8 | dims u32 x rank | f32 x prod(dims)
//! CRC32 (IEEE) of every preceding byte, u32
//! ```
//! All integers and floats are little-endian.

use crate::params::{NetworkSpec, ParamsError, PolicyParams, Tensor, PARAMS_VERSION};
use std::path::Path;
use thiserror::Error;

pub const MAGIC: &[u8; 4] = b"WBC1";

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("checkpoint checksum mismatch or truncated file")]
    Checksum,
    #[error("not a checkpoint file (bad magic)")]
    BadMagic,
    #[error("unsupported checkpoint version {0}")]
    Version(u32),
    #[error("malformed checkpoint: {0}")]
    Malformed(String),
    #[error("checkpoint does not match the network: {0}")]
    Shape(#[from] ParamsError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub fn encode(p: &PolicyParams) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + p.num_params() * 4);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&p.version.to_le_bytes());
    out.extend_from_slice(&(p.tensors.len() as u32).to_le_bytes());
    for t in &p.tensors {
        let name = t.name.as_bytes();
        out.extend_from_slice(&(name.len() as u16).to_le_bytes());
        out.extend_from_slice(name);
        out.push(t.shape.len() as u8);
        for &d in &t.shape {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        for &v in &t.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], CheckpointError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        let end = end.ok_or_else(|| CheckpointError::Malformed(format!("unexpected end at byte {}", self.pos)))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, CheckpointError> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16, CheckpointError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().expect("2 bytes")))
    }

    fn u32(&mut self) -> Result<u32, CheckpointError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }
}

/// Parses a checkpoint without checking it against a network spec.
pub fn decode(bytes: &[u8]) -> Result<PolicyParams, CheckpointError> {
    if bytes.len() < 4 {
        return Err(CheckpointError::Checksum);
    }
    let (body, tail) = bytes.split_at(bytes.len() - 4);
    let stored = u32::from_le_bytes(tail.try_into().expect("4 bytes"));
    if crc32fast::hash(body) != stored {
        return Err(CheckpointError::Checksum);
    }
    let mut r = Reader { buf: body, pos: 0 };
    if r.take(4).map_err(|_| CheckpointError::BadMagic)? != MAGIC {
        return Err(CheckpointError::BadMagic);
    }
    let version = r.u32()?;
    if version != PARAMS_VERSION {
        return Err(CheckpointError::Version(version));
    }
    let count = r.u32()? as usize;
    // Every tensor needs at least three header bytes.
    if count > body.len() / 3 {
        return Err(CheckpointError::Malformed(format!("tensor count {count} exceeds file size")));
    }
    let mut tensors = Vec::with_capacity(count);
    for _ in 0..count {
        let n = r.u16()? as usize;
        let name = std::str::from_utf8(r.take(n)?)
            .map_err(|_| CheckpointError::Malformed("tensor name is not UTF-8".into()))?
            .to_string();
        let rank = r.u8()? as usize;
        let mut shape = Vec::with_capacity(rank);
        let mut len = 1usize;
        for _ in 0..rank {
            let d = r.u32()? as usize;
            len = len
                .checked_mul(d)
                .filter(|&l| l <= body.len() / 4)
                .ok_or_else(|| CheckpointError::Malformed(format!("tensor {name} is larger than the file")))?;
            shape.push(d);
        }
        let raw = r.take(len * 4)?;
        let data = raw.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes"))).collect();
        tensors.push(Tensor { name, shape, data });
    }
    if r.pos != body.len() {
        return Err(CheckpointError::Malformed(format!("{} trailing bytes", body.len() - r.pos)));
    }
    Ok(PolicyParams { version, tensors })
}

pub fn save(p: &PolicyParams, path: &Path) -> Result<(), CheckpointError> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, encode(p))?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// Reads a checkpoint and checks it against `spec`.
pub fn load(path: &Path, spec: &NetworkSpec) -> Result<PolicyParams, CheckpointError> {
    let p = decode(&std::fs::read(path)?)?;
    p.check(spec)?;
    Ok(p)
}
