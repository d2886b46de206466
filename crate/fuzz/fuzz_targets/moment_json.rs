#![no_main]

use hiergap::lashier::exact_psd;
use hiergap::local::MomentMatrix;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(m) = MomentMatrix::from_json(text) {
        if m.dim() <= 32 {
            let _ = exact_psd(&m.entries);
        }
    }
});
