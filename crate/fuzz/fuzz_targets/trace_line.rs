#![no_main]

use libfuzzer_sys::fuzz_target;
use wbc_core::trace::{read_trace, TraceRecord};

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(r) = TraceRecord::parse_line(text) {
            let _ = TraceRecord::parse_line(&r.to_line()).expect("written line re-parses");
        }
    }
    let _ = read_trace(data);
});
