#![no_main]

use fanns_core::snapshot::{decode_segment_graph, encode_segment_graph};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let ds = fanns_fuzz::fixture();
    if let Ok(index) = decode_segment_graph(data, ds) {
        let bytes = encode_segment_graph(&index);
        let again = decode_segment_graph(&bytes, ds).expect("re-encoded snapshot decodes");
        assert_eq!(encode_segment_graph(&again), bytes);
    }
});
