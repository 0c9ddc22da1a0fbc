#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(m) = fanns_core::io::decode_fvecs(data) {
        let mut out = Vec::new();
        fanns_core::io::write_fvecs(&mut out, &m).unwrap();
        assert_eq!(out, data);
    }
});
