#![no_main]

use hiergap::ensembles::Hypergraph;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(h) = Hypergraph::from_json(text) {
        let _ = h.is_independent(&[]);
        let _ = Hypergraph::from_json(&h.to_json()).expect("re-parse");
    }
});
