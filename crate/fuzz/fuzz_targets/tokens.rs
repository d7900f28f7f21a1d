#![no_main]

use formloc::driver::RunMode;
use formloc::solver::Weight;
use formloc::ssa::StmtId;
use libfuzzer_sys::fuzz_target;

// small values read from flags and file fields
fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(id) = s.parse::<StmtId>() {
            assert_eq!(id.to_string().parse::<StmtId>().unwrap(), id);
        }
        if let Ok(w) = s.parse::<Weight>() {
            assert_eq!(w.to_string().parse::<Weight>().unwrap(), w);
        }
        if let Ok(m) = s.parse::<RunMode>() {
            assert_eq!(m.to_string().parse::<RunMode>().unwrap(), m);
        }
    }
});
