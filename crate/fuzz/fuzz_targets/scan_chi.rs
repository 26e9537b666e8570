#![no_main]

use libfuzzer_sys::fuzz_target;
use moment_obc::cli::parse_scan_range;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(v) = parse_scan_range(s) {
        assert!(!v.is_empty() && v.len() <= 100_000);
        assert!(v.iter().all(|c| *c > 0.0 && *c <= 1.0 + 1e-12));
    }
});
