//! Replays the fuzz corpus seeds through the parsers so that they stay
//! meaningful: valid seeds parse, the deliberately broken ones are rejected.

use std::fs;
use std::path::PathBuf;

use ttexp::config::{parse_benchmark_config, parse_run_config};
use ttexp::tt::json::{operator_from_json, tensor_from_json};

const BROKEN: [&str; 4] = ["truncated.json", "bad_ranks.json", "unknown_key.json", "misplaced.json"];

fn replay(target: &str, parse: impl Fn(&str) -> bool) {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut seen = 0;
    for entry in fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        let name = path.file_name().unwrap().to_str().unwrap().to_string();
        let ok = parse(&fs::read_to_string(&path).unwrap());
        assert_eq!(ok, !BROKEN.contains(&name.as_str()), "{target}/{name}");
        seen += 1;
    }
    assert!(seen >= 3, "{target}: only {seen} seeds");
}

#[test]
fn tensor_seeds() {
    replay("parse_tt_json", |s| tensor_from_json(s).is_ok());
}

#[test]
fn operator_seeds() {
    replay("parse_operator_json", |s| operator_from_json(s).is_ok());
}

#[test]
fn run_config_seeds() {
    replay("parse_run_config", |s| parse_run_config(s).is_ok());
}

#[test]
fn benchmark_config_seeds() {
    replay("parse_benchmark_config", |s| parse_benchmark_config(s).is_ok());
}
