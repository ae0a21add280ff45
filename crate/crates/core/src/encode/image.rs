//! 28x28 digit images and the pixel-level transforms applied before encoding.

use thiserror::Error;

pub const IMAGE_SIDE: usize = 28;
pub const PIXELS: usize = IMAGE_SIDE * IMAGE_SIDE;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ImageError {
    #[error("label {0} is not a digit")]
    Label(u8),
    #[error("binarization threshold must be in 1..=255, got {0}")]
    Threshold(u32),
}

#[derive(Clone, PartialEq, Eq)]
pub struct GrayImage {
    pixels: Box<[u8; PIXELS]>,
    label: u8,
}

impl GrayImage {
    pub fn new(pixels: [u8; PIXELS], label: u8) -> Result<GrayImage, ImageError> {
        if label > 9 {
            return Err(ImageError::Label(label));
        }
        Ok(GrayImage {
            pixels: Box::new(pixels),
            label,
        })
    }

    pub fn label(&self) -> u8 {
        self.label
    }

    pub fn pixels(&self) -> &[u8; PIXELS] {
        &self.pixels
    }

    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.pixels[row * IMAGE_SIDE + col]
    }

    /// Flips the image along its main diagonal. The label is kept.
    pub fn transpose(&self) -> GrayImage {
        GrayImage {
            pixels: Box::new(transpose_pixels(&self.pixels)),
            label: self.label,
        }
    }

    pub fn with_label(&self, label: u8) -> Result<GrayImage, ImageError> {
        GrayImage::new(*self.pixels, label)
    }
}

impl std::fmt::Debug for GrayImage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GrayImage").field("label", &self.label).finish_non_exhaustive()
    }
}

fn transpose_pixels<T: Copy>(p: &[T; PIXELS]) -> [T; PIXELS] {
    let mut out = *p;
    for r in 0..IMAGE_SIDE {
        for c in 0..IMAGE_SIDE {
            out[c * IMAGE_SIDE + r] = p[r * IMAGE_SIDE + c];
        }
    }
    out
}

/// A black-and-white image; each pixel is 0 or 1.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct BinaryImage {
    pixels: Box<[u8; PIXELS]>,
    label: u8,
}

impl BinaryImage {
    /// Builds from 0/1 pixels; any nonzero value counts as 1.
    pub fn from_bits(bits: &[u8; PIXELS], label: u8) -> BinaryImage {
        let mut pixels = [0u8; PIXELS];
        for (d, s) in pixels.iter_mut().zip(bits) {
            *d = (*s != 0) as u8;
        }
        BinaryImage {
            pixels: Box::new(pixels),
            label,
        }
    }

    pub fn label(&self) -> u8 {
        self.label
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> bool {
        self.pixels[row * IMAGE_SIDE + col] != 0
    }

    pub fn pixels(&self) -> &[u8; PIXELS] {
        &self.pixels
    }

    pub fn transpose(&self) -> BinaryImage {
        BinaryImage {
            pixels: Box::new(transpose_pixels(&self.pixels)),
            label: self.label,
        }
    }
}

/// Pixels at or above `threshold` become 1, everything else 0.
pub fn binarize_image(img: &GrayImage, threshold: u32) -> Result<BinaryImage, ImageError> {
    if !(1..=255).contains(&threshold) {
        return Err(ImageError::Threshold(threshold));
    }
    let mut pixels = [0u8; PIXELS];
    for (d, s) in pixels.iter_mut().zip(img.pixels.iter()) {
        *d = (*s as u32 >= threshold) as u8;
    }
    Ok(BinaryImage {
        pixels: Box::new(pixels),
        label: img.label,
    })
}

/// Swaps each even label with its odd partner: 0<->1, 2<->3, ..., 8<->9.
pub fn swap_label(label: u8) -> u8 {
    debug_assert!(label <= 9);
    label ^ 1
}
