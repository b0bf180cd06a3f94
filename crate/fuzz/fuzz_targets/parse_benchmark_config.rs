#![no_main]

use libfuzzer_sys::fuzz_target;
use ttexp::benchmarks::default_solver;
use ttexp::config::parse_benchmark_config;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(c) = parse_benchmark_config(text) {
        c.solver.apply(&default_solver(c.benchmark)).unwrap();
    }
});
