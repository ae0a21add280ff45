//! Benchmark streams: one pass over the merged 70K images, optionally
//! split into phases that transpose images and swap labels.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::image::{binarize_image, swap_label, GrayImage, ImageError};
use super::posneg::{posneg_encode, EncodedFrame};
use crate::decode::LabelVolley;

pub const CLASSES: usize = 10;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StreamError {
    #[error("stream needs {needed} images, only {available} loaded")]
    InsufficientImages { needed: usize, available: usize },
    #[error(transparent)]
    Image(#[from] ImageError),
    #[error("unknown stream {0:?}; expected 1phase or 3phase")]
    UnknownStream(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transform {
    Identity,
    Transpose,
    TransposeLabelSwap,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Phase {
    pub length: usize,
    pub transform: Transform,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StreamSpec {
    pub phases: Vec<Phase>,
}

impl StreamSpec {
    /// All `len` images as-is.
    pub fn one_phase(len: usize) -> StreamSpec {
        StreamSpec {
            phases: vec![Phase {
                length: len,
                transform: Transform::Identity,
            }],
        }
    }

    /// 20K as-is, 20K transposed, 30K transposed with labels swapped.
    pub fn three_phase() -> StreamSpec {
        StreamSpec::three_phase_with(20_000, 20_000, 30_000)
    }

    pub fn three_phase_with(a: usize, b: usize, c: usize) -> StreamSpec {
        let phase = |length, transform| Phase { length, transform };
        StreamSpec {
            phases: vec![
                phase(a, Transform::Identity),
                phase(b, Transform::Transpose),
                phase(c, Transform::TransposeLabelSwap),
            ],
        }
    }

    /// `"1phase"` (70K) or `"3phase"`.
    pub fn named(name: &str) -> Result<StreamSpec, StreamError> {
        match name {
            "1phase" => Ok(StreamSpec::one_phase(70_000)),
            "3phase" => Ok(StreamSpec::three_phase()),
            other => Err(StreamError::UnknownStream(other.to_owned())),
        }
    }

    pub fn len(&self) -> usize {
        self.phases.iter().map(|p| p.length).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Transform applied at stream position `s`.
    pub fn transform_at(&self, s: usize) -> Option<Transform> {
        let mut start = 0;
        for p in &self.phases {
            if s < start + p.length {
                return Some(p.transform);
            }
            start += p.length;
        }
        None
    }

    /// First positions of each phase after the first.
    pub fn boundaries(&self) -> Vec<usize> {
        self.phases
            .iter()
            .scan(0, |acc, p| {
                *acc += p.length;
                Some(*acc)
            })
            .take(self.phases.len().saturating_sub(1))
            .collect()
    }

    /// Copy of the stream restricted to positions `start..`.
    pub fn skip(&self, start: usize) -> StreamSpec {
        let mut remaining = start;
        let phases = self
            .phases
            .iter()
            .filter_map(|p| {
                let cut = remaining.min(p.length);
                remaining -= cut;
                (p.length > cut).then_some(Phase {
                    length: p.length - cut,
                    transform: p.transform,
                })
            })
            .collect();
        StreamSpec { phases }
    }
}

/// Applies a phase transform to one image.
pub fn apply_transform(img: &GrayImage, t: Transform) -> GrayImage {
    match t {
        Transform::Identity => img.clone(),
        Transform::Transpose => img.transpose(),
        Transform::TransposeLabelSwap => img
            .transpose()
            .with_label(swap_label(img.label()))
            .expect("swapped digit is a digit"),
    }
}

/// One prepared stream element.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StreamItem {
    pub position: usize,
    pub frame: EncodedFrame,
    pub label: LabelVolley,
}

/// Lazily encodes `images[offset..]` under `spec`, in stream order.
///
/// `offset` is the absolute stream position of the first item and selects
/// which images are used, so a resumed stream sees the same inputs.
pub fn build_stream<'a>(
    spec: &StreamSpec,
    images: &'a [GrayImage],
    threshold: u32,
) -> Result<impl Iterator<Item = StreamItem> + 'a, StreamError> {
    build_stream_from(spec, images, threshold, 0)
}

pub fn build_stream_from<'a>(
    spec: &StreamSpec,
    images: &'a [GrayImage],
    threshold: u32,
    offset: usize,
) -> Result<impl Iterator<Item = StreamItem> + 'a, StreamError> {
    let needed = spec.len();
    if images.len() < needed {
        return Err(StreamError::InsufficientImages {
            needed,
            available: images.len(),
        });
    }
    if !(1..=255).contains(&threshold) {
        return Err(ImageError::Threshold(threshold).into());
    }
    let spec = spec.clone();
    Ok((offset.min(needed)..needed).map(move |s| {
        let t = spec.transform_at(s).expect("position inside stream");
        let img = apply_transform(&images[s], t);
        let bin = binarize_image(&img, threshold).expect("threshold validated");
        StreamItem {
            position: s,
            label: LabelVolley::from_class(img.label() as usize, CLASSES).expect("digit label"),
            frame: posneg_encode(&bin),
        }
    }))
}
