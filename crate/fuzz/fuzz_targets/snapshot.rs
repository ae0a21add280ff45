#![no_main]

use libfuzzer_sys::fuzz_target;
use tnn_core::metrics::Snapshot;

fuzz_target!(|data: &[u8]| {
    if let Ok(snap) = Snapshot::from_bytes(data) {
        assert_eq!(snap.to_bytes(), data);
    }
});
