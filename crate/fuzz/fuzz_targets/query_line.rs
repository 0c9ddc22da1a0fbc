#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(line) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(record) = fanns_core::io::parse_query_line(line) {
        let _ = record.resolve(fanns_fuzz::fixture());
    }
});
