#![no_main]

use ecoecho_core::assessment::parse_survey_csv;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let _ = parse_survey_csv(data);
});
