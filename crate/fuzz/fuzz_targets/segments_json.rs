#![no_main]

use libfuzzer_sys::fuzz_target;
use speechprep::diar_formats::{segments_from_json, segments_to_json};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(segments) = segments_from_json(text) {
        let _ = segments_from_json(&segments_to_json(&segments));
    }
});
