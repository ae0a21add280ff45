//! Dataset ingestion and spike encoding.

pub mod idx;
pub mod image;
pub mod posneg;
pub mod stream;

pub use idx::{load_mnist, IdxError};
pub use image::{binarize_image, swap_label, BinaryImage, GrayImage};
pub use posneg::{posneg_encode, EncodedFrame};
pub use stream::{build_stream, StreamItem, StreamSpec, Transform};
