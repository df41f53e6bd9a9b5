//! IDX (MNIST) image and label files.

use std::fs;
use std::path::Path;

use crate::encoder::Image;
use crate::error::{Error, IdxError};
use crate::fixed::Format;

pub const IMAGES_MAGIC: u32 = 0x0000_0803;
pub const LABELS_MAGIC: u32 = 0x0000_0801;

fn be_u32(b: &[u8], at: usize) -> u32 {
    u32::from_be_bytes(b[at..at + 4].try_into().unwrap())
}

/// Raw images: `(rows, cols, pixels of every image back to back)`.
pub fn parse_images(bytes: &[u8]) -> Result<(usize, usize, Vec<u8>), IdxError> {
    let file = "images";
    if bytes.len() < 16 {
        return Err(IdxError::Truncated {
            file,
            expected: 16,
            actual: bytes.len(),
        });
    }
    let magic = be_u32(bytes, 0);
    if magic != IMAGES_MAGIC {
        return Err(IdxError::BadMagic {
            file,
            found: magic,
            expected: IMAGES_MAGIC,
        });
    }
    let count = be_u32(bytes, 4) as usize;
    let rows = be_u32(bytes, 8) as usize;
    let cols = be_u32(bytes, 12) as usize;
    let expected = 16 + count * rows * cols;
    if bytes.len() != expected {
        return Err(IdxError::Truncated {
            file,
            expected,
            actual: bytes.len(),
        });
    }
    Ok((rows, cols, bytes[16..].to_vec()))
}

pub fn parse_labels(bytes: &[u8]) -> Result<Vec<u8>, IdxError> {
    let file = "labels";
    if bytes.len() < 8 {
        return Err(IdxError::Truncated {
            file,
            expected: 8,
            actual: bytes.len(),
        });
    }
    let magic = be_u32(bytes, 0);
    if magic != LABELS_MAGIC {
        return Err(IdxError::BadMagic {
            file,
            found: magic,
            expected: LABELS_MAGIC,
        });
    }
    let count = be_u32(bytes, 4) as usize;
    if bytes.len() != 8 + count {
        return Err(IdxError::Truncated {
            file,
            expected: 8 + count,
            actual: bytes.len(),
        });
    }
    let labels = bytes[8..].to_vec();
    if let Some((index, &value)) = labels.iter().enumerate().find(|(_, &l)| l > 9) {
        return Err(IdxError::Label { index, value });
    }
    Ok(labels)
}

/// Pair up images and labels, normalizing pixels into `format`.
pub fn parse_mnist(
    image_bytes: &[u8],
    label_bytes: &[u8],
    format: Format,
) -> Result<Vec<(Image, u8)>, Error> {
    let (rows, cols, pixels) = parse_images(image_bytes)?;
    let labels = parse_labels(label_bytes)?;
    if rows != cols {
        return Err(IdxError::NotSquare { rows, cols }.into());
    }
    let per = rows * cols;
    let images = pixels.len().checked_div(per).unwrap_or(0);
    if images != labels.len() {
        return Err(IdxError::CountMismatch {
            images,
            labels: labels.len(),
        }
        .into());
    }
    pixels
        .chunks(per.max(1))
        .take(images)
        .zip(labels)
        .map(|(px, label)| Ok((Image::from_u8(rows, px, format)?, label)))
        .collect()
}

pub fn load_mnist(
    images_path: impl AsRef<Path>,
    labels_path: impl AsRef<Path>,
    format: Format,
) -> Result<Vec<(Image, u8)>, Error> {
    let read = |p: &Path| {
        fs::read(p).map_err(|source| Error::Io {
            path: p.to_path_buf(),
            source,
        })
    };
    let images = read(images_path.as_ref())?;
    let labels = read(labels_path.as_ref())?;
    parse_mnist(&images, &labels, format)
}

pub fn encode_images(side: usize, images: &[Vec<u8>]) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + images.len() * side * side);
    for v in [IMAGES_MAGIC, images.len() as u32, side as u32, side as u32] {
        out.extend_from_slice(&v.to_be_bytes());
    }
    for img in images {
        assert_eq!(img.len(), side * side);
        out.extend_from_slice(img);
    }
    out
}

pub fn encode_labels(labels: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&LABELS_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    out
}
