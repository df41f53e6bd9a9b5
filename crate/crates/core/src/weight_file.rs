//! `DTSN` weight files.
//!
//! ```text
//! "DTSN"  u16 version  u16 layer_count
//! per layer:
//!   u32 in_count  u32 out_count  u8 kind  u8 weight_bits  u8 frac_bits  u8 reserved
//!   in_count * out_count signed weights, synapse-major, weight_bits wide
//! u32 CRC32 of every preceding byte
//! ```
//!
//! All integers are little-endian. Kind codes: 0 FIXED, 1 TERNARY, 2 POW2.

use std::fs;
use std::path::Path;

use crate::error::{Error, WeightFileError};
use crate::model::{WeightKind, WeightMatrix};

pub const MAGIC: &[u8; 4] = b"DTSN";
pub const VERSION: u16 = 1;
const FILE_HEADER: usize = 8;
const LAYER_HEADER: usize = 12;

/// Shape information recoverable from a weight file alone.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetworkFragment {
    /// Patch side, when layer 0 is a square-fan-in TERNARY/POW2 encoder.
    pub patch_size: Option<usize>,
    /// Image side implied by the encoder's neuron count and patch size.
    pub image_side: Option<usize>,
    /// Output width of every layer: `[Y, hidden..., classes]`.
    pub layer_sizes: Vec<usize>,
}

impl NetworkFragment {
    pub fn from_layers(layers: &[WeightMatrix]) -> Self {
        let layer_sizes = layers.iter().map(WeightMatrix::out_count).collect();
        let mut patch_size = None;
        let mut image_side = None;
        if let Some(first) = layers.first() {
            let p = first.in_count().isqrt();
            let y = first.out_count().isqrt();
            if first.kind() != WeightKind::Fixed
                && p > 0
                && p * p == first.in_count()
                && y > 0
                && y * y == first.out_count()
            {
                patch_size = Some(p);
                image_side = Some(y + p - 1);
            }
        }
        NetworkFragment {
            patch_size,
            image_side,
            layer_sizes,
        }
    }
}

pub fn encode(layers: &[WeightMatrix]) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(layers.len() as u16).to_le_bytes());
    for w in layers {
        out.extend_from_slice(&(w.in_count() as u32).to_le_bytes());
        out.extend_from_slice(&(w.out_count() as u32).to_le_bytes());
        out.extend_from_slice(&[w.kind().code(), w.weight_bits(), w.frac_bits(), 0]);
        match w.weight_bits() {
            8 => out.extend(w.data().iter().map(|&v| v as i8 as u8)),
            _ => {
                for &v in w.data() {
                    out.extend_from_slice(&v.to_le_bytes());
                }
            }
        }
    }
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    out
}

fn u16_at(b: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([b[at], b[at + 1]])
}

fn u32_at(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(b[at..at + 4].try_into().unwrap())
}

struct LayerHeader {
    offset: usize,
    in_count: usize,
    out_count: usize,
    kind: WeightKind,
    weight_bits: u8,
    frac_bits: u8,
}

pub fn decode(bytes: &[u8]) -> Result<Vec<WeightMatrix>, WeightFileError> {
    let actual = bytes.len();
    if actual < 4 {
        return Err(WeightFileError::SizeMismatch {
            expected: FILE_HEADER + 4,
            actual,
        });
    }
    if &bytes[..4] != MAGIC {
        return Err(WeightFileError::BadMagic {
            found: bytes[..4].to_vec(),
        });
    }
    if actual < FILE_HEADER {
        return Err(WeightFileError::SizeMismatch {
            expected: FILE_HEADER + 4,
            actual,
        });
    }
    let version = u16_at(bytes, 4);
    if version != VERSION {
        return Err(WeightFileError::Version { version });
    }
    let layer_count = u16_at(bytes, 6) as usize;

    let mut headers = Vec::with_capacity(layer_count);
    let mut offset = FILE_HEADER;
    for layer in 0..layer_count {
        if offset + LAYER_HEADER > actual {
            return Err(WeightFileError::SizeMismatch {
                expected: offset + LAYER_HEADER + 4,
                actual,
            });
        }
        let in_count = u32_at(bytes, offset) as usize;
        let out_count = u32_at(bytes, offset + 4) as usize;
        let kind_code = bytes[offset + 8];
        let weight_bits = bytes[offset + 9];
        let frac_bits = bytes[offset + 10];
        let kind = WeightKind::from_code(kind_code).ok_or(WeightFileError::Kind {
            layer,
            kind: kind_code,
            offset: offset + 8,
        })?;
        if weight_bits != 8 && weight_bits != 16 {
            return Err(WeightFileError::Width {
                layer,
                bits: weight_bits,
                offset: offset + 9,
            });
        }
        headers.push(LayerHeader {
            offset,
            in_count,
            out_count,
            kind,
            weight_bits,
            frac_bits,
        });
        let payload = in_count
            .saturating_mul(out_count)
            .saturating_mul(weight_bits as usize / 8);
        offset = offset.saturating_add(LAYER_HEADER).saturating_add(payload);
    }
    let expected = offset.saturating_add(4);
    if expected != actual {
        return Err(WeightFileError::SizeMismatch { expected, actual });
    }
    let stored = u32_at(bytes, offset);
    let computed = crc32fast::hash(&bytes[..offset]);
    if stored != computed {
        return Err(WeightFileError::Crc {
            offset,
            stored,
            computed,
        });
    }
    if layer_count == 0 {
        return Err(WeightFileError::Empty);
    }

    let mut layers = Vec::with_capacity(layer_count);
    for (layer, h) in headers.iter().enumerate() {
        if h.frac_bits >= h.weight_bits {
            return Err(WeightFileError::FracBits {
                layer,
                frac_bits: h.frac_bits,
                weight_bits: h.weight_bits,
                offset: h.offset + 10,
            });
        }
        if let Some(prev) = layers.last().map(WeightMatrix::out_count) {
            if prev != h.in_count {
                return Err(WeightFileError::ShapeChain {
                    layer,
                    in_count: h.in_count,
                    prev_out: prev,
                    offset: h.offset,
                });
            }
        }
        let start = h.offset + LAYER_HEADER;
        let n = h.in_count * h.out_count;
        let width = h.weight_bits as usize / 8;
        let mut data = Vec::with_capacity(n);
        for i in 0..n {
            let at = start + i * width;
            let v = if width == 1 {
                bytes[at] as i8 as i16
            } else {
                i16::from_le_bytes([bytes[at], bytes[at + 1]])
            };
            if !h.kind.admits(v as i32, h.weight_bits) {
                return Err(WeightFileError::IllegalValue {
                    layer,
                    row: i / h.out_count,
                    col: i % h.out_count,
                    value: v as i32,
                    offset: at,
                });
            }
            data.push(v);
        }
        let w = WeightMatrix::new(
            h.in_count,
            h.out_count,
            h.kind,
            h.weight_bits,
            h.frac_bits,
            data,
        )
        .expect("validated above");
        layers.push(w);
    }
    Ok(layers)
}

pub fn save_weights(path: impl AsRef<Path>, layers: &[WeightMatrix]) -> Result<(), Error> {
    let path = path.as_ref();
    fs::write(path, encode(layers)).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_weights(path: impl AsRef<Path>) -> Result<(NetworkFragment, Vec<WeightMatrix>), Error> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let layers = decode(&bytes)?;
    Ok((NetworkFragment::from_layers(&layers), layers))
}
