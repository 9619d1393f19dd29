#![no_main]

use libfuzzer_sys::fuzz_target;
use speechprep::diar_formats::{parse_rttm, write_rttm};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(parsed) = parse_rttm(text) else { return };
    for (uri, segments) in parsed {
        // parsed URIs never contain whitespace, so writing back must succeed
        let _ = write_rttm(&uri, &segments).expect("parsed segments write back");
    }
});
