#![no_main]

use ecoecho_core::llm::http::parse_classification;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|text: &str| {
    if let Ok(c) = parse_classification(text) {
        assert!((0.0..=1.0).contains(&c.confidence), "confidence {}", c.confidence);
    }
});
