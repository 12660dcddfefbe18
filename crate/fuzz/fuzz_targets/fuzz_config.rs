#![no_main]

use libfuzzer_sys::fuzz_target;
use supnorm_cli::config::Config;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(config) = Config::parse(text) {
            let report = config.verify();
            if report.is_valid() {
                let _ = config.order();
            }
        }
    }
});
