#![no_main]

use fanns_core::snapshot::{decode_ivf, encode_ivf};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let ds = fanns_fuzz::fixture();
    if let Ok(index) = decode_ivf(data, ds) {
        let bytes = encode_ivf(&index);
        let again = decode_ivf(&bytes, ds).expect("re-encoded snapshot decodes");
        assert_eq!(encode_ivf(&again), bytes);
    }
});
