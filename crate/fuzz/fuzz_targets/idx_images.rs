#![no_main]

use libfuzzer_sys::fuzz_target;
use tnn_core::encode::idx::{encode_images, parse_images};

fuzz_target!(|data: &[u8]| {
    if let Ok(images) = parse_images(data) {
        assert_eq!(encode_images(&images), data);
    }
});
