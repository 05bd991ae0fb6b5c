#![no_main]

use libfuzzer_sys::fuzz_target;
use ordered_cif::ScenarioSpec;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(spec) = ScenarioSpec::from_toml(text) {
        assert!(spec.groups.len() >= 2);
        spec.validate().unwrap();
    }
});
