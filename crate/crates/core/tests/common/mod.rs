#![allow(dead_code)]

use tnn_core::encode::image::PIXELS;
use tnn_core::encode::GrayImage;

/// Class `c` is a horizontal bar and a vertical bar placed by `c`, jittered
/// by the image index so consecutive samples differ.
pub fn digit_pixels(class: u8, index: usize) -> [u8; PIXELS] {
    let mut px = [0u8; PIXELS];
    let shift = index % 3;
    let row = 3 + 2 * class as usize + shift;
    let col = 24 - 2 * class as usize - shift;
    for k in 4..24 {
        px[row * 28 + k] = 255;
        px[k * 28 + col] = 200;
    }
    px
}

pub fn synthetic(n: usize) -> Vec<GrayImage> {
    (0..n)
        .map(|i| {
            let class = (i * 7 % 10) as u8;
            GrayImage::new(digit_pixels(class, i), class).unwrap()
        })
        .collect()
}
