#![no_main]

use fanns_core::snapshot::{decode_label_graph, encode_label_graph};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let ds = fanns_fuzz::fixture();
    if let Ok(index) = decode_label_graph(data, ds) {
        let bytes = encode_label_graph(&index);
        let again = decode_label_graph(&bytes, ds).expect("re-encoded snapshot decodes");
        assert_eq!(encode_label_graph(&again), bytes);
    }
});
