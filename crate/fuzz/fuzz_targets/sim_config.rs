#![no_main]

use coint_cli::config::SimSpec;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(spec) = SimSpec::parse(text) {
        let _ = spec.var_model();
        let _ = spec.settings(0);
    }
});
