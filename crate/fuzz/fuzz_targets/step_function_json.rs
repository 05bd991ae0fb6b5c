#![no_main]

use libfuzzer_sys::fuzz_target;
use ordered_cif::StepFunction;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(f) = StepFunction::from_json(text) else { return };
    assert!(f.knots().windows(2).all(|w| w[0] < w[1]));
    let json = serde_json::to_string(&f).unwrap();
    assert_eq!(StepFunction::from_json(&json).unwrap(), f);
});
