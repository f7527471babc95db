#![no_main]

use libfuzzer_sys::fuzz_target;
use wbc_agent::checkpoint::{decode, encode};
use wbc_agent::params::NetworkSpec;

fuzz_target!(|data: &[u8]| {
    if let Ok(p) = decode(data) {
        // Anything accepted must re-encode to the same bytes.
        assert_eq!(encode(&p), data);
        let _ = p.check(&NetworkSpec::default());
    }
});
