#![no_main]
use gl2tower_core::subgroup::SubgroupJson;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(j) = serde_json::from_slice::<SubgroupJson>(data) else { return };
    if j.level > 32 {
        return;
    }
    if let Ok(h) = j.to_subgroup() {
        assert!(h.level() <= j.level.max(1));
        let back = h.to_json().to_subgroup().expect("json round trip");
        assert_eq!(back.elements(), h.elements());
    }
});
