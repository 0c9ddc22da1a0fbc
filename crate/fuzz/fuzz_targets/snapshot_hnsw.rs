#![no_main]

use fanns_core::snapshot::{decode_hnsw, encode_hnsw};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let ds = fanns_fuzz::fixture();
    if let Ok(index) = decode_hnsw(data, ds) {
        let bytes = encode_hnsw(&index);
        let again = decode_hnsw(&bytes, ds).expect("re-encoded snapshot decodes");
        assert_eq!(encode_hnsw(&again), bytes);
    }
});
