#![no_main]
use gl2tower_core::subgroup::{parse_level, parse_subgroup_text};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    // keep the closures small: levels above 32 are legal but slow
    let first = s.lines().map(str::trim).find(|l| !l.is_empty() && !l.starts_with('#'));
    let lvl = first.and_then(|l| l.strip_prefix("level")).and_then(|r| r.trim_start().strip_prefix('='));
    if let Some(l) = lvl {
        if parse_level(l).map_or(false, |v| v > 32) {
            return;
        }
    }
    if let Ok(h) = parse_subgroup_text(s) {
        let back = parse_subgroup_text(&h.to_text()).expect("text round trip");
        assert_eq!(back.elements(), h.elements());
    }
});
