#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(schema) = fanns_core::io::parse_schema(text) {
        let again = fanns_core::io::schema_to_json(&schema);
        assert_eq!(fanns_core::io::parse_schema(&again).unwrap(), schema);
    }
});
