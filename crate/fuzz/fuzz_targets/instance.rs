#![no_main]

use formloc::solver::MaxSatInstance;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok((inst, k, mode)) = MaxSatInstance::parse(s) {
            let (again, k2, mode2) = MaxSatInstance::parse(&inst.dump(k, mode)).expect("dump parses");
            assert_eq!((again.dump(k2, mode2), k2), (inst.dump(k, mode), k));
        }
    }
});
