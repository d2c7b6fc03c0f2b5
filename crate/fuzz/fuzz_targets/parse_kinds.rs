#![no_main]

use libfuzzer_sys::fuzz_target;
use radviz3d::ingest::parse_kinds;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = parse_kinds(text);
    }
});
