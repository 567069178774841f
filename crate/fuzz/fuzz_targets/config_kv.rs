#![no_main]
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = mala_lab::config::parse_kv(text);
        let _ = mala_lab::config::parse_config_text(text);
    }
});
