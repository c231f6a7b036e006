#![no_main]

use std::io::Cursor;
use std::path::Path;

use ecoecho_core::event::fold;
use ecoecho_core::store::read_log;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(events) = read_log(Cursor::new(data), Path::new("fuzz.log")) {
        let _ = fold(&events);
    }
});
