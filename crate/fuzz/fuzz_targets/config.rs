#![no_main]

use libfuzzer_sys::fuzz_target;
use stc_core::config::parse_config;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = parse_config(text) {
        // Whatever parses must survive its own echo.
        let again = parse_config(&cfg.to_text()).expect("echoed config reparses");
        assert_eq!(again.to_text(), cfg.to_text());
    }
});
