#![no_main]
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(hs) = mala_lab::hrange::parse_h_list(text) {
            assert!(!hs.is_empty());
            assert!(hs.iter().all(|h| h.is_finite() && *h > 0.0));
        }
    }
});
