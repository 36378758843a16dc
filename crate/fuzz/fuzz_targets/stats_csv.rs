#![no_main]

use libfuzzer_sys::fuzz_target;
use stc_core::symbolize::{make_cutlines, ChannelStats};

fuzz_target!(|data: &[u8]| {
    let Ok(stats) = ChannelStats::from_csv(data) else { return };
    // Zero or tiny sigma may be refused; anything accepted must be usable.
    if let Ok(cuts) = make_cutlines(&stats, 8) {
        for k in 0..stats.channels() {
            let b = cuts.boundaries(k);
            assert!(b.iter().all(|x| x.is_finite()));
            assert!(b.windows(2).all(|w| w[0] < w[1]));
        }
    }
});
