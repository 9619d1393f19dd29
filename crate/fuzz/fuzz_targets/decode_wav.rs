#![no_main]

use std::io::Cursor;

use libfuzzer_sys::fuzz_target;
use speechprep::audio_io::{decode_wav, TARGET_RATE};

fuzz_target!(|data: &[u8]| {
    let _ = decode_wav(Cursor::new(data), TARGET_RATE);
});
