#![no_main]

use libfuzzer_sys::fuzz_target;
use radviz3d::evalsim::MixtureSpec;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(spec) = MixtureSpec::from_json(text) {
        assert_eq!(MixtureSpec::from_json(&spec.to_json()).unwrap(), spec);
    }
});
