#![no_main]

use libfuzzer_sys::fuzz_target;
use tnn_core::network::checkpoint::{checkpoint, restore};

fuzz_target!(|data: &[u8]| {
    if let Ok(ck) = restore(data) {
        assert_eq!(checkpoint(&ck.network, ck.position, &ck.extra), data);
    }
});
