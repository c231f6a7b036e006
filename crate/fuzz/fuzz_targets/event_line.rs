#![no_main]

use ecoecho_core::event::SessionEvent;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|line: &str| {
    if let Ok(event) = SessionEvent::from_json_line(line) {
        let again = SessionEvent::from_json_line(&event.to_json_line()).expect("event reparses");
        assert_eq!(again.to_json_line(), event.to_json_line());
    }
});
