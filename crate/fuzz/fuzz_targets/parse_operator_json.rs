#![no_main]

use libfuzzer_sys::fuzz_target;
use ttexp::tt::json::{operator_from_json, operator_to_json};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(w) = operator_from_json(text) {
        let again = operator_from_json(&operator_to_json(&w).unwrap()).unwrap();
        assert_eq!(w, again);
    }
});
