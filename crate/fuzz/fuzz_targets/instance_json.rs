#![no_main]

use hiergap::csp::CspInstance;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(inst) = CspInstance::from_json(text) {
        let back = CspInstance::from_json(&inst.to_json()).expect("re-parse");
        assert_eq!(back.to_json(), inst.to_json());
        let zeros = vec![0; inst.n];
        for i in 0..inst.constraints.len() {
            let _ = inst.constraint_satisfied(i, &zeros);
        }
    }
});
