#![no_main]

use ecoecho_core::playthrough::PlayerScript;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|text: &str| {
    if let Ok(script) = PlayerScript::from_toml_str(text) {
        let again = PlayerScript::from_toml_str(&script.to_toml_string()).expect("script reparses");
        assert_eq!(again, script);
    }
});
