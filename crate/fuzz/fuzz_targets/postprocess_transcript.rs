#![no_main]

use libfuzzer_sys::fuzz_target;
use speechprep::postproc::{postprocess_transcript, DedupConfig};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let cfg = DedupConfig::default();
    let once = postprocess_transcript(text, &cfg);
    assert_eq!(postprocess_transcript(&once, &cfg), once);
});
