//! PosNeg receptive-field encoder.
//!
//! Each 3x3 window (stride 1) contributes its four corner pixels, emitted
//! twice: once as-is and once inverted. Every 8-line volley therefore
//! carries exactly four spikes, all at `t = 0`.

use super::image::{BinaryImage, IMAGE_SIDE};
use crate::time::{SpikeTime, Volley};

/// Side of the first-layer receptive field.
pub const RF_SIDE: usize = 3;
/// Windows per image side: 28 - 2 = 26.
pub const FIELD_GRID: usize = IMAGE_SIDE - RF_SIDE + 1;
/// 26 * 26 = 676 receptive fields.
pub const FIELDS: usize = FIELD_GRID * FIELD_GRID;
pub const CORNERS: usize = 4;
/// Four positive lines followed by four negative lines.
pub const FIELD_WIDTH: usize = 2 * CORNERS;

/// Corner offsets in row-major order.
pub const CORNER_OFFSETS: [(usize, usize); CORNERS] = [(0, 0), (0, 2), (2, 0), (2, 2)];

/// One encoded image: 676 volleys of width 8, stored contiguously in
/// row-major field order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EncodedFrame {
    lines: Vec<SpikeTime>,
    label: u8,
}

impl EncodedFrame {
    pub fn label(&self) -> u8 {
        self.label
    }

    pub fn fields(&self) -> usize {
        self.lines.len() / FIELD_WIDTH
    }

    /// Volley of the field whose top-left pixel is `(k / 26, k % 26)`.
    pub fn field(&self, k: usize) -> &[SpikeTime] {
        &self.lines[k * FIELD_WIDTH..(k + 1) * FIELD_WIDTH]
    }

    pub fn lines(&self) -> &[SpikeTime] {
        &self.lines
    }

    /// The four corner bits of field `k`, bit `c` set when corner `c` is 1.
    pub fn corner_mask(&self, k: usize) -> u8 {
        self.field(k)[..CORNERS]
            .iter()
            .enumerate()
            .fold(0, |m, (c, t)| m | ((t.is_finite() as u8) << c))
    }

    pub fn spike_count(&self) -> usize {
        self.lines.iter().filter(|t| t.is_finite()).count()
    }
}

/// Corner bits of the window whose top-left pixel is `(row, col)`.
pub fn corner_bits(img: &BinaryImage, row: usize, col: usize) -> [bool; CORNERS] {
    CORNER_OFFSETS.map(|(dr, dc)| img.get(row + dr, col + dc))
}

/// PosNeg volley for a set of bits: positives first, then negatives.
pub fn posneg_lines(bits: &[bool]) -> impl Iterator<Item = SpikeTime> + '_ {
    let spike = |on: bool| if on { SpikeTime::ZERO } else { SpikeTime::INF };
    bits.iter().map(move |&b| spike(b)).chain(bits.iter().map(move |&b| spike(!b)))
}

/// Volley for field mask `mask` as produced by [`EncodedFrame::corner_mask`].
pub fn field_volley_from_mask(mask: u8) -> Volley {
    let bits: Vec<bool> = (0..CORNERS).map(|c| mask >> c & 1 == 1).collect();
    Volley::from_times(posneg_lines(&bits).collect())
}

pub fn posneg_encode(img: &BinaryImage) -> EncodedFrame {
    let mut lines = Vec::with_capacity(FIELDS * FIELD_WIDTH);
    for row in 0..FIELD_GRID {
        for col in 0..FIELD_GRID {
            lines.extend(posneg_lines(&corner_bits(img, row, col)));
        }
    }
    EncodedFrame {
        lines,
        label: img.label(),
    }
}

/// PosNeg encoding of every pixel of a `side x side` window (not just the
/// corners), row-major: `side^2` positive lines then `side^2` negative lines.
/// Used to drive standalone probe columns.
pub fn posneg_encode_window(img: &BinaryImage, row: usize, col: usize, side: usize) -> Volley {
    assert!(row + side <= IMAGE_SIDE && col + side <= IMAGE_SIDE, "window outside image");
    let bits: Vec<bool> = (0..side * side).map(|k| img.get(row + k / side, col + k % side)).collect();
    Volley::from_times(posneg_lines(&bits).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encode::image::PIXELS;
    use proptest::prelude::*;

    const INF: Option<u32> = None;

    fn img_from(f: impl Fn(usize, usize) -> bool) -> BinaryImage {
        let mut p = [0u8; PIXELS];
        for r in 0..IMAGE_SIDE {
            for c in 0..IMAGE_SIDE {
                p[r * IMAGE_SIDE + c] = f(r, c) as u8;
            }
        }
        BinaryImage::from_bits(&p, 0)
    }

    #[test]
    fn corner_example() {
        let v: Vec<SpikeTime> = posneg_lines(&[true, false, false, true]).collect();
        let want = Volley::from_options([Some(0), INF, INF, Some(0), INF, Some(0), Some(0), INF]);
        assert_eq!(&v[..], &want[..]);
        let v: Vec<SpikeTime> = posneg_lines(&[false; 4]).collect();
        assert!(v[..4].iter().all(|t| t.is_inf()));
        assert!(v[4..].iter().all(|t| *t == SpikeTime::ZERO));
    }

    #[test]
    fn encoding_uses_window_corners() {
        // Only pixel (3, 5) set: it is the (0,0) corner of field (3,5), the
        // (0,2) corner of field (3,3), (2,0) of (1,5), and (2,2) of (1,3).
        let img = img_from(|r, c| (r, c) == (3, 5));
        let f = posneg_encode(&img);
        assert_eq!(f.fields(), 676);
        let k = |r: usize, c: usize| r * FIELD_GRID + c;
        assert_eq!(f.corner_mask(k(3, 5)), 0b0001);
        assert_eq!(f.corner_mask(k(3, 3)), 0b0010);
        assert_eq!(f.corner_mask(k(1, 5)), 0b0100);
        assert_eq!(f.corner_mask(k(1, 3)), 0b1000);
        assert_eq!(f.corner_mask(k(2, 4)), 0);
        let lit = (0..FIELDS).filter(|&i| f.corner_mask(i) != 0).count();
        assert_eq!(lit, 4);
        assert_eq!(field_volley_from_mask(0b0001).as_ref() as &[SpikeTime], f.field(k(3, 5)));
    }

    #[test]
    fn window_probe_encoder() {
        let img = img_from(|r, c| r == 6 && c == 12);
        let v = posneg_encode_window(&img, 5, 11, 5);
        assert_eq!(v.width(), 50);
        assert_eq!(v.spike_count(), 25);
        assert_eq!(v[6], SpikeTime::ZERO);
        assert!(v[25 + 6].is_inf());
    }

    proptest! {
        #[test]
        fn every_field_has_four_spikes(pix in prop::collection::vec(0u8..2, PIXELS)) {
            let img = BinaryImage::from_bits(&pix.try_into().unwrap(), 2);
            let f = posneg_encode(&img);
            prop_assert_eq!(f.spike_count(), 2704);
            for k in 0..FIELDS {
                prop_assert_eq!(f.field(k).iter().filter(|t| t.is_finite()).count(), 4);
                prop_assert!(f.field(k).iter().all(|t| t.is_inf() || *t == SpikeTime::ZERO));
            }
        }
    }
}
