#![no_main]

use libfuzzer_sys::fuzz_target;
use stc_core::data::parse_pamap2;

fuzz_target!(|data: &[u8]| {
    let _ = parse_pamap2(data, 101);
});
