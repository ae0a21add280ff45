//! MNIST IDX reader.
//!
//! Both files are big-endian. Images: magic `0x00000803`, count, rows,
//! cols, then `count * rows * cols` unsigned bytes. Labels: magic
//! `0x00000801`, count, then `count` unsigned bytes.

use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use super::image::{GrayImage, IMAGE_SIDE, PIXELS};

pub const IMAGE_MAGIC: u32 = 0x0000_0803;
pub const LABEL_MAGIC: u32 = 0x0000_0801;

#[derive(Debug, Error)]
pub enum IdxError {
    #[error("cannot read {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("bad magic number 0x{found:08x} at byte 0, expected 0x{expected:08x}")]
    BadMagic { expected: u32, found: u32 },
    #[error("truncated file: need {expected} bytes, have {actual} (short at byte offset {actual})")]
    Truncated { expected: usize, actual: usize },
    #[error("{extra} trailing bytes after byte offset {expected}")]
    TrailingBytes { expected: usize, extra: usize },
    #[error("images are {rows}x{cols} (header byte offset 8), expected {IMAGE_SIDE}x{IMAGE_SIDE}")]
    Dimensions { rows: u32, cols: u32 },
    #[error("label {value} at byte offset {offset} is not a digit")]
    LabelRange { offset: usize, value: u8 },
    #[error("{images} images but {labels} labels")]
    CountMismatch { images: usize, labels: usize },
}

fn be_u32(bytes: &[u8], offset: usize) -> Result<u32, IdxError> {
    let field = bytes.get(offset..offset + 4).ok_or(IdxError::Truncated {
        expected: offset + 4,
        actual: bytes.len(),
    })?;
    Ok(u32::from_be_bytes(field.try_into().expect("4-byte slice")))
}

fn check_magic(bytes: &[u8], expected: u32) -> Result<(), IdxError> {
    let found = be_u32(bytes, 0)?;
    if found != expected {
        return Err(IdxError::BadMagic { expected, found });
    }
    Ok(())
}

fn check_len(bytes: &[u8], expected: usize) -> Result<(), IdxError> {
    match bytes.len() {
        n if n < expected => Err(IdxError::Truncated { expected, actual: n }),
        n if n > expected => Err(IdxError::TrailingBytes {
            expected,
            extra: n - expected,
        }),
        _ => Ok(()),
    }
}

/// Decodes an IDX image file into raw 28x28 pixel buffers.
pub fn parse_images(bytes: &[u8]) -> Result<Vec<[u8; PIXELS]>, IdxError> {
    check_magic(bytes, IMAGE_MAGIC)?;
    let count = be_u32(bytes, 4)? as usize;
    let rows = be_u32(bytes, 8)?;
    let cols = be_u32(bytes, 12)?;
    if rows as usize != IMAGE_SIDE || cols as usize != IMAGE_SIDE {
        return Err(IdxError::Dimensions { rows, cols });
    }
    let expected = count
        .checked_mul(PIXELS)
        .and_then(|n| n.checked_add(16))
        .ok_or(IdxError::Truncated {
            expected: usize::MAX,
            actual: bytes.len(),
        })?;
    check_len(bytes, expected)?;
    Ok(bytes[16..]
        .chunks_exact(PIXELS)
        .map(|c| c.try_into().expect("chunk of PIXELS bytes"))
        .collect())
}

/// Decodes an IDX label file; every label must be a digit 0-9.
pub fn parse_labels(bytes: &[u8]) -> Result<Vec<u8>, IdxError> {
    check_magic(bytes, LABEL_MAGIC)?;
    let count = be_u32(bytes, 4)? as usize;
    let expected = count.checked_add(8).ok_or(IdxError::Truncated {
        expected: usize::MAX,
        actual: bytes.len(),
    })?;
    check_len(bytes, expected)?;
    let labels = bytes[8..].to_vec();
    if let Some(pos) = labels.iter().position(|&l| l > 9) {
        return Err(IdxError::LabelRange {
            offset: 8 + pos,
            value: labels[pos],
        });
    }
    Ok(labels)
}

pub fn read_file(path: &Path) -> Result<Vec<u8>, IdxError> {
    fs::read(path).map_err(|source| IdxError::Io {
        path: path.to_owned(),
        source,
    })
}

/// Loads an image file and its label file, paired in file order.
pub fn load_mnist(images_path: &Path, labels_path: &Path) -> Result<Vec<GrayImage>, IdxError> {
    let images = parse_images(&read_file(images_path)?)?;
    let labels = parse_labels(&read_file(labels_path)?)?;
    pair(images, labels)
}

pub fn pair(images: Vec<[u8; PIXELS]>, labels: Vec<u8>) -> Result<Vec<GrayImage>, IdxError> {
    if images.len() != labels.len() {
        return Err(IdxError::CountMismatch {
            images: images.len(),
            labels: labels.len(),
        });
    }
    Ok(images
        .into_iter()
        .zip(labels)
        .map(|(pixels, label)| GrayImage::new(pixels, label).expect("labels validated"))
        .collect())
}

/// Serializes images back into IDX form. Used for fixtures and fuzz seeds.
pub fn encode_images(images: &[[u8; PIXELS]]) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + images.len() * PIXELS);
    for word in [IMAGE_MAGIC, images.len() as u32, IMAGE_SIDE as u32, IMAGE_SIDE as u32] {
        out.extend_from_slice(&word.to_be_bytes());
    }
    for img in images {
        out.extend_from_slice(img);
    }
    out
}

pub fn encode_labels(labels: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&LABEL_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    out
}
