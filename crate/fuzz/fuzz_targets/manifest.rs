#![no_main]
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(m) = mala_lab::manifest::parse_manifest(text) {
            assert!(m.artifacts.iter().all(|a| mala_lab::manifest::is_plain_name(&a.path)));
        }
    }
});
