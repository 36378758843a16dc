#![no_main]

use libfuzzer_sys::fuzz_target;
use stc_core::evaluate::BenchmarkMatrix;

fuzz_target!(|data: &[u8]| {
    if let Ok(m) = BenchmarkMatrix::from_csv(data) {
        let _ = m.to_table();
    }
});
