#![no_main]

use libfuzzer_sys::fuzz_target;
use speechprep::textnorm::{normalize_transcript, NormConfig};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let cfg = NormConfig::default();
    let once = normalize_transcript(text, &cfg);
    assert_eq!(normalize_transcript(&once, &cfg), once);
});
