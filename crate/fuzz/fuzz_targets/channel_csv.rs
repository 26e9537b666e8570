#![no_main]

use libfuzzer_sys::fuzz_target;
use moment_obc::channel::{read_profile_csv, write_profile_csv};

fuzz_target!(|data: &[u8]| {
    if let Ok(t) = read_profile_csv(data) {
        assert!(t.y.windows(2).all(|w| w[0] < w[1]));
        let mut buf = Vec::new();
        write_profile_csv(&t, &mut buf).unwrap();
        assert_eq!(read_profile_csv(buf.as_slice()).unwrap(), t);
    }
});
