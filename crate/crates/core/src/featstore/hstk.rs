//! `HSTK`: one utterance's backbone hidden states.
//!
//! Little-endian layout:
//!
//! | field   | type                 |
//! |---------|----------------------|
//! | magic   | `b"HSTK"`            |
//! | version | u16 = 1              |
//! | flags   | u16 = 0              |
//! | layers  | u32                  |
//! | frames  | u32                  |
//! | dim     | u32                  |
//! | id_len  | u16                  |
//! | id      | `id_len` UTF-8 bytes |
//! | payload | `layers*frames*dim` binary32, layer-major, then frame, then feature |

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::validate_utterance_id;
use crate::error::{Error, HstkError, Result};

pub const HSTK_MAGIC: [u8; 4] = *b"HSTK";
pub const HSTK_VERSION: u16 = 1;
/// Bytes before the utterance id.
pub const HSTK_FIXED_HEADER_LEN: usize = 22;

/// Payload reads are chunked so a corrupted shape cannot force a huge
/// up-front allocation.
const READ_CHUNK: usize = 1 << 20;

/// An `layers x frames x dim` tensor of hidden states for one utterance.
/// Immutable once built; every instance satisfies the format invariants.
#[derive(Debug, Clone, PartialEq)]
pub struct HiddenStack {
    utterance_id: String,
    layers: usize,
    frames: usize,
    dim: usize,
    values: Vec<f32>,
}

impl HiddenStack {
    pub fn new(
        utterance_id: impl Into<String>,
        layers: usize,
        frames: usize,
        dim: usize,
        values: Vec<f32>,
    ) -> Result<Self, HstkError> {
        let utterance_id = utterance_id.into();
        validate_utterance_id(&utterance_id).map_err(HstkError::BadId)?;
        if utterance_id.len() > u16::MAX as usize {
            return Err(HstkError::BadId(
                "utterance id longer than 65535 bytes".into(),
            ));
        }
        let bad_shape = || HstkError::BadShape {
            layers: layers.min(u32::MAX as usize) as u32,
            frames: frames.min(u32::MAX as usize) as u32,
            dim: dim.min(u32::MAX as usize) as u32,
        };
        if layers == 0 || frames == 0 || dim == 0 {
            return Err(bad_shape());
        }
        if [layers, frames, dim].iter().any(|&x| x > u32::MAX as usize) {
            return Err(bad_shape());
        }
        let count = layers
            .checked_mul(frames)
            .and_then(|x| x.checked_mul(dim))
            .ok_or_else(bad_shape)?;
        if values.len() != count {
            return Err(HstkError::Truncated);
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(HstkError::CorruptValues(i));
        }
        Ok(Self {
            utterance_id,
            layers,
            frames,
            dim,
            values,
        })
    }

    pub fn utterance_id(&self) -> &str {
        &self.utterance_id
    }

    pub fn layers(&self) -> usize {
        self.layers
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    /// The `frames x dim` matrix of one layer, row-major.
    pub fn layer(&self, l: usize) -> &[f32] {
        let size = self.frames * self.dim;
        &self.values[l * size..(l + 1) * size]
    }

    #[inline]
    pub fn at(&self, layer: usize, frame: usize, feature: usize) -> f32 {
        self.values[(layer * self.frames + frame) * self.dim + feature]
    }

    pub fn payload_bytes(&self) -> usize {
        self.values.len() * 4
    }

    pub fn encoded_len(&self) -> usize {
        HSTK_FIXED_HEADER_LEN + self.utterance_id.len() + self.payload_bytes()
    }
}

/// Writes `stack` and returns the number of bytes emitted.
pub fn write_hstk<W: Write>(stack: &HiddenStack, mut sink: W) -> std::io::Result<usize> {
    let mut header = Vec::with_capacity(HSTK_FIXED_HEADER_LEN + stack.utterance_id.len());
    header.extend_from_slice(&HSTK_MAGIC);
    header.extend_from_slice(&HSTK_VERSION.to_le_bytes());
    header.extend_from_slice(&0u16.to_le_bytes());
    header.extend_from_slice(&(stack.layers as u32).to_le_bytes());
    header.extend_from_slice(&(stack.frames as u32).to_le_bytes());
    header.extend_from_slice(&(stack.dim as u32).to_le_bytes());
    header.extend_from_slice(&(stack.utterance_id.len() as u16).to_le_bytes());
    header.extend_from_slice(stack.utterance_id.as_bytes());
    sink.write_all(&header)?;

    let mut buf = Vec::with_capacity(READ_CHUNK.min(stack.payload_bytes()));
    for chunk in stack.values.chunks(READ_CHUNK / 4) {
        buf.clear();
        for v in chunk {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        sink.write_all(&buf)?;
    }
    sink.flush()?;
    Ok(header.len() + stack.payload_bytes())
}

fn read_array<const N: usize, R: Read>(source: &mut R) -> Result<[u8; N], HstkError> {
    let mut buf = [0u8; N];
    source.read_exact(&mut buf).map_err(eof_as_truncated)?;
    Ok(buf)
}

fn eof_as_truncated(e: std::io::Error) -> HstkError {
    if e.kind() == std::io::ErrorKind::UnexpectedEof {
        HstkError::Truncated
    } else {
        HstkError::Io(e)
    }
}

/// Reads and validates one stack. The stream must end right after the
/// payload.
pub fn read_hstk<R: Read>(mut source: R) -> Result<HiddenStack, HstkError> {
    if read_array::<4, _>(&mut source)? != HSTK_MAGIC {
        return Err(HstkError::BadMagic);
    }
    let version = u16::from_le_bytes(read_array(&mut source)?);
    if version != HSTK_VERSION {
        return Err(HstkError::UnsupportedVersion(version));
    }
    let flags = u16::from_le_bytes(read_array(&mut source)?);
    if flags != 0 {
        return Err(HstkError::UnsupportedFlags(flags));
    }
    let layers = u32::from_le_bytes(read_array(&mut source)?);
    let frames = u32::from_le_bytes(read_array(&mut source)?);
    let dim = u32::from_le_bytes(read_array(&mut source)?);
    let bad_shape = HstkError::BadShape {
        layers,
        frames,
        dim,
    };
    if layers == 0 || frames == 0 || dim == 0 {
        return Err(bad_shape);
    }
    let count = (layers as u64)
        .checked_mul(frames as u64)
        .and_then(|x| x.checked_mul(dim as u64))
        .filter(|&c| c <= (usize::MAX / 4) as u64)
        .ok_or(bad_shape)? as usize;

    let id_len = u16::from_le_bytes(read_array(&mut source)?) as usize;
    let mut id = vec![0u8; id_len];
    source.read_exact(&mut id).map_err(eof_as_truncated)?;
    let id = String::from_utf8(id).map_err(|_| HstkError::BadId("not valid UTF-8".into()))?;

    let total = count * 4;
    let mut bytes = Vec::with_capacity(total.min(READ_CHUNK));
    let got = source
        .by_ref()
        .take(total as u64)
        .read_to_end(&mut bytes)
        .map_err(HstkError::Io)?;
    if got != total {
        return Err(HstkError::Truncated);
    }
    let mut probe = [0u8; 1];
    loop {
        match source.read(&mut probe) {
            Ok(0) => break,
            Ok(_) => return Err(HstkError::TrailingData),
            Err(e) if e.kind() == std::io::ErrorKind::Interrupted => continue,
            Err(e) => return Err(HstkError::Io(e)),
        }
    }

    let values: Vec<f32> = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    HiddenStack::new(id, layers as usize, frames as usize, dim as usize, values)
}

pub fn read_hstk_file(path: &Path) -> Result<HiddenStack> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_hstk(BufReader::new(file)).map_err(|e| match e {
        HstkError::Io(source) => Error::io(path, source),
        other => Error::Data(format!("{}: {other}", path.display())),
    })
}

pub fn write_hstk_file(stack: &HiddenStack, path: &Path) -> Result<usize> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_hstk(stack, BufWriter::new(file)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn encode(stack: &HiddenStack) -> Vec<u8> {
        let mut out = Vec::new();
        write_hstk(stack, &mut out).unwrap();
        out
    }

    #[test]
    fn smallest_stack_layout() {
        let stack = HiddenStack::new("u1", 1, 1, 1, vec![0.0]).unwrap();
        let bytes = encode(&stack);
        assert_eq!(bytes.len(), HSTK_FIXED_HEADER_LEN + 2 + 4);
        assert_eq!(
            bytes,
            [
                b'H', b'S', b'T', b'K', 1, 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0, 2, 0, b'u',
                b'1', 0, 0, 0, 0
            ]
        );
        assert_eq!(read_hstk(&bytes[..]).unwrap(), stack);
    }

    #[test]
    fn full_size_payload_byte_count() {
        // 25 layers x 199 frames x 1024 features of binary32.
        let (l, n, d) = (25usize, 199usize, 1024usize);
        let mut expected = 0usize;
        for _ in 0..l * n * d {
            expected += std::mem::size_of::<f32>();
        }
        assert_eq!(expected, 20_377_600);
        let stack = HiddenStack::new("big", l, n, d, vec![0.5; l * n * d]).unwrap();
        assert_eq!(stack.payload_bytes(), expected);
        let written = write_hstk(&stack, std::io::sink()).unwrap();
        assert_eq!(written, HSTK_FIXED_HEADER_LEN + 3 + expected);
    }

    #[test]
    fn rejects_wrong_magic() {
        let mut bytes = encode(&HiddenStack::new("u1", 1, 1, 1, vec![1.0]).unwrap());
        bytes[0] = b'X';
        assert!(matches!(read_hstk(&bytes[..]), Err(HstkError::BadMagic)));
        assert_eq!(
            read_hstk(&bytes[..]).unwrap_err().to_string(),
            "not an HSTK file"
        );
    }

    #[test]
    fn rejects_version() {
        let mut bytes = encode(&HiddenStack::new("u1", 1, 1, 1, vec![1.0]).unwrap());
        bytes[4] = 2;
        let err = read_hstk(&bytes[..]).unwrap_err();
        assert!(err.to_string().contains("unsupported version"), "{err}");
    }

    #[test]
    fn rejects_short_payload() {
        let bytes = encode(&HiddenStack::new("u1", 2, 2, 2, vec![1.0; 8]).unwrap());
        let err = read_hstk(&bytes[..bytes.len() - 4]).unwrap_err();
        assert_eq!(err.to_string(), "truncated");
    }

    #[test]
    fn rejects_trailing_bytes() {
        let mut bytes = encode(&HiddenStack::new("u1", 1, 1, 1, vec![1.0]).unwrap());
        bytes.push(0);
        assert!(matches!(
            read_hstk(&bytes[..]),
            Err(HstkError::TrailingData)
        ));
    }

    #[test]
    fn rejects_non_finite_payload() {
        let mut bytes = encode(&HiddenStack::new("u1", 1, 1, 2, vec![1.0, 2.0]).unwrap());
        let n = bytes.len();
        bytes[n - 4..].copy_from_slice(&f32::NAN.to_le_bytes());
        let err = read_hstk(&bytes[..]).unwrap_err();
        assert!(err.to_string().starts_with("corrupt values"), "{err}");
    }

    #[test]
    fn constructor_enforces_invariants() {
        assert!(HiddenStack::new("", 1, 1, 1, vec![0.0]).is_err());
        assert!(HiddenStack::new("a b", 1, 1, 1, vec![0.0]).is_err());
        assert!(HiddenStack::new("a/b", 1, 1, 1, vec![0.0]).is_err());
        assert!(HiddenStack::new("ok", 0, 1, 1, vec![]).is_err());
        assert!(HiddenStack::new("ok", 1, 1, 2, vec![0.0]).is_err());
        assert!(HiddenStack::new("ok", 1, 1, 1, vec![f32::INFINITY]).is_err());
    }

    #[test]
    fn huge_declared_shape_fails_without_allocating() {
        let mut bytes = encode(&HiddenStack::new("u1", 1, 1, 1, vec![1.0]).unwrap());
        bytes[8..12].copy_from_slice(&u32::MAX.to_le_bytes());
        bytes[12..16].copy_from_slice(&u32::MAX.to_le_bytes());
        assert!(read_hstk(&bytes[..]).is_err());
    }

    fn arb_stack() -> impl Strategy<Value = HiddenStack> {
        (
            1usize..5,
            1usize..6,
            1usize..7,
            "[A-Za-z0-9_.-]{1,12}".prop_filter("not a path component", |s| s != "." && s != ".."),
        )
            .prop_flat_map(|(l, n, d, id)| {
                prop::collection::vec(
                    any::<f32>().prop_filter("finite", |v| v.is_finite()),
                    l * n * d,
                )
                .prop_map(move |values| HiddenStack::new(id.clone(), l, n, d, values).unwrap())
            })
    }

    proptest! {
        #[test]
        fn round_trip_is_bit_exact(stack in arb_stack()) {
            let bytes = encode(&stack);
            prop_assert_eq!(bytes.len(), stack.encoded_len());
            let back = read_hstk(&bytes[..]).unwrap();
            prop_assert_eq!(back.utterance_id(), stack.utterance_id());
            let a: Vec<u32> = back.values().iter().map(|v| v.to_bits()).collect();
            let b: Vec<u32> = stack.values().iter().map(|v| v.to_bits()).collect();
            prop_assert_eq!(a, b);
            prop_assert_eq!((back.layers(), back.frames(), back.dim()), (stack.layers(), stack.frames(), stack.dim()));
        }

        #[test]
        fn corrupted_fixed_header_byte_is_rejected(
            stack in arb_stack(),
            pos in 0usize..HSTK_FIXED_HEADER_LEN,
            xor in 1u8..=255,
        ) {
            let mut bytes = encode(&stack);
            bytes[pos] ^= xor;
            prop_assert!(read_hstk(&bytes[..]).is_err());
        }
    }
}
