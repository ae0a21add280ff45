#![no_main]

use libfuzzer_sys::fuzz_target;
use tnn_core::encode::idx::{encode_labels, parse_labels};

fuzz_target!(|data: &[u8]| {
    if let Ok(labels) = parse_labels(data) {
        assert!(labels.iter().all(|&l| l < 10));
        assert_eq!(encode_labels(&labels), data);
    }
});
