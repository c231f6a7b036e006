#![no_main]

use ecoecho_core::llm::http::{parse_classification, parse_completion_body};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(content) = parse_completion_body(data) {
        let _ = parse_classification(&content);
    }
});
