#![no_main]

use libfuzzer_sys::fuzz_target;
use radviz3d::mrp::MrpModel;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(model) = MrpModel::from_json(text) {
        let w = model.projection_matrix();
        assert_eq!(w.shape(), (model.pre_reduction.nrows(), model.k));
        assert_eq!(MrpModel::from_json(&model.to_json()).unwrap(), model);
    }
});
