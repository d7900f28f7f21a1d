#![no_main]

use formloc::encoder::{parse_clause_line, write_clause_line};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(c) = parse_clause_line(s) {
            assert_eq!(parse_clause_line(&write_clause_line(&c)).unwrap(), c);
        }
    }
});
