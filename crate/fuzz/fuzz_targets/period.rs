#![no_main]

use coint_core::Period;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(p) = text.parse::<Period>() {
        assert_eq!(p.to_string().parse::<Period>().unwrap(), p);
        let _ = p.next();
    }
});
