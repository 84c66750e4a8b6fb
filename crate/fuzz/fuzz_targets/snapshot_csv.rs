#![no_main]

use libfuzzer_sys::fuzz_target;
use shs_core::cli_io::read_snapshot_csv;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(table) = read_snapshot_csv(text) {
            assert!(table.rows.iter().all(|r| r.len() == table.columns.len()));
        }
    }
});
