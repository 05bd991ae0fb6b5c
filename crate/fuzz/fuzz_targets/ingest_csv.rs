#![no_main]

use libfuzzer_sys::fuzz_target;
use ordered_cif::{ingest_csv, write_csv};

fuzz_target!(|data: &[u8]| {
    let order = ["a".to_string(), "b".to_string(), "c".to_string()];
    let Ok(ds) = ingest_csv(data, &order[..2]).or_else(|_| ingest_csv(data, &order)) else {
        return;
    };
    assert!(ds.groups().iter().all(|g| g.records.iter().all(|r| r.time > 0.0 && r.time.is_finite())));

    // Whatever parses must survive a write/read round trip.
    let mut out = Vec::new();
    write_csv(&ds, &mut out).unwrap();
    let labels: Vec<String> = ds.labels().iter().map(|s| s.to_string()).collect();
    let again = ingest_csv(&out[..], &labels).unwrap();
    assert_eq!(again.sizes(), ds.sizes());
});
