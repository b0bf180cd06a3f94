#![no_main]

use libfuzzer_sys::fuzz_target;
use ttexp::als::SolveConfig;
use ttexp::config::parse_run_config;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(c) = parse_run_config(text) {
        // a validated config always yields a valid solver configuration
        c.solver.apply(&SolveConfig::default()).unwrap();
    }
});
