#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(line) = std::str::from_utf8(data) else {
        return;
    };
    let schema = fanns_fuzz::fixture().schema();
    if let Ok(row) = fanns_core::io::parse_attribute_line(schema, line) {
        let again = fanns_core::io::attribute_line(schema, &row);
        assert_eq!(fanns_core::io::parse_attribute_line(schema, &again).unwrap(), row);
    }
});
