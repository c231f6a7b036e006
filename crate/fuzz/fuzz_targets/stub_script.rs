#![no_main]

use ecoecho_core::llm::StubScript;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|text: &str| {
    let _ = StubScript::from_toml_str(text);
});
