#![no_main]
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let _ = mala_core::oracle1d::decode_kernel_dump(data);
});
