#![no_main]

use libfuzzer_sys::fuzz_target;
use speechprep::diar_formats::{parse_annotation_csv, resolve_overlaps};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(segments) = parse_annotation_csv(text) {
        for s in &segments {
            assert!(s.end_s > s.start_s);
        }
        let resolved = resolve_overlaps(&segments);
        for w in resolved.windows(2) {
            assert!(w[0].end_s <= w[1].start_s);
        }
    }
});
