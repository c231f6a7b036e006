#![no_main]

use ecoecho_core::scenario::load_scenario;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = load_scenario(data) {
        let text = s.to_toml_string().expect("valid scenario serializes");
        let again = load_scenario(text.as_bytes()).expect("serialized scenario reloads");
        assert_eq!(again.to_toml_string().expect("reloaded scenario serializes"), text);
    }
});
