#![no_main]

use libfuzzer_sys::fuzz_target;
use moment_obc::cli::{parse_radial_counts, parse_reduction, resolve_theory};
use moment_obc::tensor::Reduction;

// Input: `name|nd|m|reduction`; empty fields are absent.
fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    let mut parts = s.splitn(4, '|');
    let field = |p: Option<&str>| p.filter(|v| !v.is_empty()).map(str::to_string);
    let name = field(parts.next());
    let nd = field(parts.next()).and_then(|v| v.parse::<usize>().ok());
    let m = field(parts.next());
    let red = field(parts.next())
        .and_then(|r| parse_reduction(&r).ok())
        .unwrap_or(Reduction::Planar);
    if let Some(m) = &m {
        let _ = parse_radial_counts(m);
    }
    if let Ok(t) = resolve_theory(name.as_deref(), nd, m.as_deref(), red) {
        assert!(t.validate().is_ok());
        assert!(t.moment_count() <= t.full3d_count());
    }
});
