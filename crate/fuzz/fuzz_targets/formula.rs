#![no_main]

use formloc::logic::sexpr::parse_formula;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(f) = parse_formula(s) {
            assert_eq!(parse_formula(&f.to_sexpr()).as_ref(), Ok(&f));
        }
    }
});
