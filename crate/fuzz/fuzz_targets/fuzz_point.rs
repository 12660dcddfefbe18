#![no_main]

use libfuzzer_sys::fuzz_target;
use supnorm_cli::parse::parse_point;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(z) = parse_point(text) {
            assert!(z.y() > 0.0 && z.x().is_finite() && z.y().is_finite());
        }
    }
});
