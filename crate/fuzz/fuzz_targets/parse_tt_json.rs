#![no_main]

use libfuzzer_sys::fuzz_target;
use ttexp::tt::json::{tensor_from_json, tensor_to_json};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(t) = tensor_from_json(text) {
        // accepted documents must survive a write/read cycle unchanged
        let again = tensor_from_json(&tensor_to_json(&t).unwrap()).unwrap();
        assert_eq!(t, again);
    }
});
