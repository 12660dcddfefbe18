#![no_main]

use libfuzzer_sys::fuzz_target;
use supnorm_cli::parse::{parse_list, parse_real_list};

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = parse_list::<u64>(text);
        if let Ok(v) = parse_real_list(text) {
            assert!(v.iter().all(|x| x.is_finite()));
        }
    }
});
