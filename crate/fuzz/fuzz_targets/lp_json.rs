#![no_main]

use hiergap::exactlp::{solve, LinearProgram};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(lp) = LinearProgram::from_json(text) {
        // Keep pivoting cheap; exact arithmetic on large programs is slow.
        if lp.num_variables() <= 6 && text.len() <= 2048 {
            let _ = solve(&lp);
        }
    }
});
