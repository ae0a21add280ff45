#![no_main]

use libfuzzer_sys::fuzz_target;
use tnn_core::NetworkConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = NetworkConfig::from_toml(text) {
        let again = NetworkConfig::from_toml(&cfg.to_toml()).expect("canonical form parses");
        assert_eq!(again, cfg);
    }
});
