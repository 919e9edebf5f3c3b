#![no_main]

use coint_cli::csvio::{parse_csv, write_csv};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(panel) = parse_csv(data) {
        // anything accepted must survive a write and re-read unchanged
        let mut buf = Vec::new();
        write_csv(&panel, &mut buf).unwrap();
        assert_eq!(parse_csv(buf.as_slice()).unwrap(), panel);
    }
});
