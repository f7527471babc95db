#![no_main]

use libfuzzer_sys::fuzz_target;
use wbc_eval::TaskSpec;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = TaskSpec::from_json(text);
    }
});
