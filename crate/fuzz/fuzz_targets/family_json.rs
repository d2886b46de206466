#![no_main]

use hiergap::local::LocalDistributionFamily;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(f) = LocalDistributionFamily::from_json(text) {
        let _ = LocalDistributionFamily::from_json(&f.to_json()).expect("re-parse");
    }
});
