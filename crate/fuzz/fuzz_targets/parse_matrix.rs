#![no_main]
use gl2tower_core::residue::parse_entries;
use gl2tower_core::ResidueMatrix;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    let Ok(e) = parse_entries(s) else { return };
    for m in [2, 4, 9, 16] {
        if let Ok(a) = ResidueMatrix::new(e, m) {
            assert!(a.det() < m && a.trace() < m);
            if a.is_unit() {
                let b = a.inv().unwrap();
                assert_eq!(a.mul(&b).unwrap(), ResidueMatrix::identity(m));
            }
        }
    }
});
