#![no_main]

use hiergap::ensembles::ParityCheckGraph;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(g) = ParityCheckGraph::parse_alist(text) {
        // Whatever parses must survive a round trip unchanged.
        let again = ParityCheckGraph::parse_alist(&g.to_alist()).expect("re-parse");
        assert_eq!(again.checks, g.checks);
        let _ = g.variable_neighbors();
    }
});
