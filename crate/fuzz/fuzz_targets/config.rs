#![no_main]

use std::path::Path;

use libfuzzer_sys::fuzz_target;
use shs_core::cli_io::parse_config_str;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = parse_config_str(text, Path::new("."));
    }
});
