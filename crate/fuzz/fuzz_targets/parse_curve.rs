#![no_main]
use gl2tower_resolvent::parse_curve;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(e) = parse_curve(s) {
        assert!(e.discriminant() != 0);
        let text = e.a.map(|v| v.to_string()).join(",");
        assert_eq!(parse_curve(&text).unwrap(), e);
    }
});
