#![no_main]

use libfuzzer_sys::fuzz_target;
use shs_core::cli_io::parse_sample_table;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = parse_sample_table(text);
    }
});
