#![no_main]

use libfuzzer_sys::fuzz_target;
use radviz3d::gdt::GdtModel;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(model) = GdtModel::from_json(text) else {
        return;
    };
    for (j, table) in model.tables.iter().enumerate() {
        for u in [1e-12, 0.25, 0.5, 0.75, 1.0] {
            let y = model.inverse(u, j);
            assert!(table.support.contains(&y));
        }
    }
});
