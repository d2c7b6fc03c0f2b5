#![no_main]

use libfuzzer_sys::fuzz_target;
use radviz3d::radviz::Scene;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(scene) = Scene::from_json(text) {
        let again = Scene::from_json(&scene.to_json()).unwrap();
        assert_eq!(again, scene);
        let _ = scene.points_csv();
        let _ = scene.anchors_csv();
    }
});
