#![no_main]

use libfuzzer_sys::fuzz_target;
use radviz3d::ingest::parse_csv;

fuzz_target!(|data: &[u8]| {
    let Ok(ds) = parse_csv(data, "label", None) else {
        return;
    };
    assert!(ds.labels().iter().all(|&l| (1..=ds.groups()).contains(&l)));
    assert!(ds.values().iter().all(|x| x.is_finite()));

    // what we write must read back to the same table
    let mut out = Vec::new();
    ds.write_csv(&mut out).unwrap();
    let back = parse_csv(out.as_slice(), "label", None).unwrap();
    assert_eq!(back.values(), ds.values());
});
