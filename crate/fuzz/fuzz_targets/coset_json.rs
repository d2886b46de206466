#![no_main]

use hiergap::cosets::{verify_coset, CosetPredicate};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(c) = CosetPredicate::from_json(text) {
        let _ = CosetPredicate::from_json(&c.to_json()).expect("re-parse");
        if c.size() <= 4096 {
            let _ = verify_coset(&c);
        }
    }
});
