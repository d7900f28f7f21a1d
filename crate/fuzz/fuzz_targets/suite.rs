#![no_main]

use formloc::suite::TestSuite;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(suite) = TestSuite::from_json(s) {
            assert_eq!(TestSuite::from_json(&suite.to_json()).unwrap(), suite);
        }
    }
});
