#![no_main]

use formloc::weights::CoverageMatrix;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(m) = CoverageMatrix::parse(s) {
            assert_eq!(CoverageMatrix::parse(&m.dump()).unwrap(), m);
        }
    }
});
