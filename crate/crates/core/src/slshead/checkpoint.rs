//! `SLSP` checkpoint: magic, version u16, D u32, then gate weight (D f64),
//! gate bias, out weight (D f64), out bias. Little-endian.

use std::io::{Read, Write};
use std::path::Path;

use super::SlsParams;
use crate::error::{Error, Result};

pub const SLSP_MAGIC: [u8; 4] = *b"SLSP";
pub const SLSP_VERSION: u16 = 1;

pub fn write_checkpoint<W: Write>(p: &SlsParams, mut sink: W) -> std::io::Result<usize> {
    let mut buf = Vec::with_capacity(10 + 8 * p.len());
    buf.extend_from_slice(&SLSP_MAGIC);
    buf.extend_from_slice(&SLSP_VERSION.to_le_bytes());
    buf.extend_from_slice(&(p.dim() as u32).to_le_bytes());
    for v in p.to_flat() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    sink.write_all(&buf)?;
    sink.flush()?;
    Ok(buf.len())
}

pub fn read_checkpoint<R: Read>(mut source: R) -> Result<SlsParams> {
    let mut bytes = Vec::new();
    source
        .read_to_end(&mut bytes)
        .map_err(|e| Error::Checkpoint(e.to_string()))?;
    if bytes.len() < 10 || bytes[..4] != SLSP_MAGIC {
        return Err(Error::Checkpoint("not an SLSP file".into()));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != SLSP_VERSION {
        return Err(Error::Checkpoint(format!("unsupported version {version}")));
    }
    let dim = u32::from_le_bytes([bytes[6], bytes[7], bytes[8], bytes[9]]) as usize;
    if dim == 0 {
        return Err(Error::Checkpoint("feature dim 0".into()));
    }
    let expected = (2 * dim + 2)
        .checked_mul(8)
        .and_then(|b| b.checked_add(10))
        .ok_or_else(|| Error::Checkpoint("feature dim too large".into()))?;
    if bytes.len() != expected {
        return Err(Error::Checkpoint(format!(
            "size {} bytes, expected {expected} for D={dim}",
            bytes.len()
        )));
    }
    let flat: Vec<f64> = bytes[10..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let p = SlsParams::from_flat(dim, &flat)?;
    if !p.is_finite() {
        return Err(Error::Checkpoint("non-finite parameter".into()));
    }
    Ok(p)
}

pub fn write_checkpoint_file(p: &SlsParams, path: &Path) -> Result<usize> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_checkpoint(p, std::io::BufWriter::new(file)).map_err(|e| Error::io(path, e))
}

pub fn read_checkpoint_file(path: &Path) -> Result<SlsParams> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_checkpoint(std::io::BufReader::new(file)).map_err(|e| match e {
        Error::Checkpoint(m) => Error::Checkpoint(format!("{}: {m}", path.display())),
        other => other,
    })
}
