#![no_main]

use hiergap::report::GapReport;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(r) = GapReport::from_json(text) {
        let _ = r.consistent();
        assert_eq!(GapReport::from_json(&r.to_json()).unwrap(), r);
    }
});
