#![no_main]

use libfuzzer_sys::fuzz_target;
use moment_obc::cli::RunFile;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(f) = RunFile::from_json(s) {
        let text = serde_json::to_string(&f).unwrap();
        assert_eq!(RunFile::from_json(&text).unwrap(), f);
    }
});
