#![no_main]

use hiergap::pidist::{verify_pi, AtomDistribution};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(d) = AtomDistribution::from_json(text) {
        let _ = verify_pi(&d);
        assert_eq!(AtomDistribution::from_json(&d.to_json()).unwrap().to_json(), d.to_json());
    }
});
