#![no_main]

use formloc::lang::{parse_unasserted, pretty};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(p) = parse_unasserted(s) {
            let printed = pretty(&p);
            let again = parse_unasserted(&printed).expect("printed program parses");
            assert_eq!(pretty(&again), printed);
        }
    }
});
