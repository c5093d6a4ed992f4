#![no_main]
use gl2tower_core::tower::parse_flag_file;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(flags) = parse_flag_file(s) {
        let text = serde_json::to_string(&flags).unwrap();
        assert_eq!(parse_flag_file(&text).unwrap(), flags);
    }
});
