//! Mono sample buffers, WAV I/O, band-limited resampling and peak normalization.

use std::io::{Read, Seek};
use std::path::Path;
use std::sync::OnceLock;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

/// Rate every pipeline stage works at.
pub const TARGET_RATE: u32 = 16_000;

#[derive(Debug, thiserror::Error)]
pub enum AudioError {
    #[error("unreadable audio file: {0}")]
    Unreadable(String),
    #[error("unsupported encoding: {0}")]
    UnsupportedEncoding(String),
    #[error("zero-length audio")]
    ZeroLength,
    #[error("sample rate must be positive")]
    ZeroRate,
    #[error("cannot write audio: {0}")]
    Write(String),
}

/// Single-channel audio at a fixed sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer {
    pub samples: Vec<f32>,
    pub sample_rate: u32,
}

impl AudioBuffer {
    pub fn new(samples: Vec<f32>, sample_rate: u32) -> Result<Self, AudioError> {
        if sample_rate == 0 {
            return Err(AudioError::ZeroRate);
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_seconds(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    pub fn peak(&self) -> f32 {
        peak(&self.samples)
    }
}

pub(crate) fn peak(samples: &[f32]) -> f32 {
    samples.iter().fold(0.0f32, |m, s| m.max(s.abs()))
}

/// Load a WAV file as mono audio at `target_rate`.
///
/// Multi-channel input is downmixed by averaging channels, then resampled.
pub fn load_audio(path: impl AsRef<Path>, target_rate: u32) -> Result<AudioBuffer, AudioError> {
    let path = path.as_ref();
    let reader = WavReader::open(path)
        .map_err(|e| AudioError::Unreadable(format!("{}: {e}", path.display())))?;
    decode_wav_reader(reader, target_rate)
}

/// Duration of a WAV file in seconds, read from its header.
pub fn wav_duration(path: impl AsRef<Path>) -> Result<f64, AudioError> {
    let path = path.as_ref();
    let reader = WavReader::open(path)
        .map_err(|e| AudioError::Unreadable(format!("{}: {e}", path.display())))?;
    let spec = reader.spec();
    if spec.sample_rate == 0 {
        return Err(AudioError::ZeroRate);
    }
    Ok(reader.duration() as f64 / spec.sample_rate as f64)
}

/// Decode WAV bytes from any seekable reader.
pub fn decode_wav<R: Read + Seek>(reader: R, target_rate: u32) -> Result<AudioBuffer, AudioError> {
    let reader = WavReader::new(reader).map_err(|e| AudioError::Unreadable(e.to_string()))?;
    decode_wav_reader(reader, target_rate)
}

fn decode_wav_reader<R: Read>(
    reader: WavReader<R>,
    target_rate: u32,
) -> Result<AudioBuffer, AudioError> {
    if target_rate == 0 {
        return Err(AudioError::ZeroRate);
    }
    let spec = reader.spec();
    if spec.channels == 0 || spec.sample_rate == 0 {
        return Err(AudioError::UnsupportedEncoding(format!(
            "{} channels at {} Hz",
            spec.channels, spec.sample_rate
        )));
    }
    let interleaved = read_interleaved(reader, spec)?;
    let channels = spec.channels as usize;
    if interleaved.len() < channels {
        return Err(AudioError::ZeroLength);
    }
    let mono = downmix(&interleaved, channels);
    let buffer = AudioBuffer::new(mono, spec.sample_rate)?;
    Ok(resample(&buffer, target_rate))
}

fn read_interleaved<R: Read>(
    mut reader: WavReader<R>,
    spec: WavSpec,
) -> Result<Vec<f32>, AudioError> {
    let bad = |e: hound::Error| AudioError::Unreadable(e.to_string());
    match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Float, 32) => reader
            .samples::<f32>()
            .collect::<Result<Vec<_>, _>>()
            .map_err(bad),
        (SampleFormat::Int, bits @ (8 | 16 | 24 | 32)) => {
            let scale = 1.0 / (1u64 << (bits - 1)) as f64;
            reader
                .samples::<i32>()
                .map(|s| s.map(|v| (v as f64 * scale) as f32))
                .collect::<Result<Vec<_>, _>>()
                .map_err(bad)
        }
        (fmt, bits) => Err(AudioError::UnsupportedEncoding(format!(
            "{fmt:?} with {bits} bits per sample"
        ))),
    }
}

fn downmix(interleaved: &[f32], channels: usize) -> Vec<f32> {
    if channels == 1 {
        return interleaved.to_vec();
    }
    interleaved
        .chunks_exact(channels)
        .map(|frame| (frame.iter().map(|&s| s as f64).sum::<f64>() / channels as f64) as f32)
        .collect()
}

/// Write `buffer` as 16-bit PCM mono WAV.
pub fn save_audio(buffer: &AudioBuffer, path: impl AsRef<Path>) -> Result<(), AudioError> {
    let path = path.as_ref();
    let werr = |e: hound::Error| AudioError::Write(format!("{}: {e}", path.display()));
    let mut writer = WavWriter::create(path, pcm16_spec(buffer.sample_rate)).map_err(werr)?;
    for &s in &buffer.samples {
        writer.write_sample(quantize_pcm16(s)).map_err(werr)?;
    }
    writer.finalize().map_err(werr)
}

/// Encode as an in-memory 16-bit PCM WAV.
pub fn encode_wav(buffer: &AudioBuffer) -> Result<Vec<u8>, AudioError> {
    let werr = |e: hound::Error| AudioError::Write(e.to_string());
    let mut cursor = std::io::Cursor::new(Vec::new());
    {
        let mut writer = WavWriter::new(&mut cursor, pcm16_spec(buffer.sample_rate)).map_err(werr)?;
        for &s in &buffer.samples {
            writer.write_sample(quantize_pcm16(s)).map_err(werr)?;
        }
        writer.finalize().map_err(werr)?;
    }
    Ok(cursor.into_inner())
}

fn pcm16_spec(sample_rate: u32) -> WavSpec {
    WavSpec {
        channels: 1,
        sample_rate,
        bits_per_sample: 16,
        sample_format: SampleFormat::Int,
    }
}

fn quantize_pcm16(s: f32) -> i16 {
    (s as f64 * 32768.0).round().clamp(-32768.0, 32767.0) as i16
}

/// Scale so the largest magnitude equals `target_peak`. Silence is returned as is.
pub fn peak_normalize(buffer: &AudioBuffer, target_peak: f32) -> AudioBuffer {
    AudioBuffer {
        samples: peak_normalize_samples(&buffer.samples, target_peak),
        sample_rate: buffer.sample_rate,
    }
}

pub(crate) fn peak_normalize_samples(samples: &[f32], target_peak: f32) -> Vec<f32> {
    let p = peak(samples);
    if p == 0.0 {
        return samples.to_vec();
    }
    let gain = target_peak as f64 / p as f64;
    samples.iter().map(|&s| (s as f64 * gain) as f32).collect()
}

/// Band-limited resampling to `target_rate`.
///
/// Output length is `round(len * target_rate / sample_rate)`.
pub fn resample(buffer: &AudioBuffer, target_rate: u32) -> AudioBuffer {
    assert!(target_rate > 0, "target rate must be positive");
    if target_rate == buffer.sample_rate {
        return buffer.clone();
    }
    let len = buffer.samples.len() as u64;
    let out_len = ((len * target_rate as u64 + buffer.sample_rate as u64 / 2)
        / buffer.sample_rate as u64) as usize;
    let ratio = target_rate as f64 / buffer.sample_rate as f64;
    let input: Vec<f64> = buffer.samples.iter().map(|&s| s as f64).collect();
    let out = resample_slice(&input, ratio, out_len);
    AudioBuffer {
        samples: out.into_iter().map(|s| s as f32).collect(),
        sample_rate: target_rate,
    }
}

/// Half-width of the interpolation kernel, in zero crossings.
const KERNEL_ZERO_CROSSINGS: usize = 32;
/// Kernel table resolution per zero crossing.
const KERNEL_OVERSAMPLE: usize = 512;
/// Passband edge relative to the lower Nyquist frequency.
const KERNEL_ROLLOFF: f64 = 0.945;
const KAISER_BETA: f64 = 9.0;

fn kernel_table() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let n = KERNEL_ZERO_CROSSINGS * KERNEL_OVERSAMPLE;
        let norm = bessel_i0(KAISER_BETA);
        (0..=n + 1)
            .map(|i| {
                let u = i as f64 / KERNEL_OVERSAMPLE as f64;
                let x = u / KERNEL_ZERO_CROSSINGS as f64;
                if x >= 1.0 {
                    return 0.0;
                }
                let window = bessel_i0(KAISER_BETA * (1.0 - x * x).sqrt()) / norm;
                KERNEL_ROLLOFF * sinc(KERNEL_ROLLOFF * u) * window
            })
            .collect()
    })
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        let px = std::f64::consts::PI * x;
        px.sin() / px
    }
}

fn bessel_i0(x: f64) -> f64 {
    let mut sum = 1.0;
    let mut term = 1.0;
    let half = x / 2.0;
    for k in 1..64 {
        term *= half / k as f64;
        let t2 = term * term;
        sum += t2;
        if t2 < sum * 1e-17 {
            break;
        }
    }
    sum
}

/// Windowed-sinc interpolation by an arbitrary `ratio` (output rate / input rate).
///
/// Output sample `m` sits at input position `m / ratio`. Samples beyond either end are zero.
pub(crate) fn resample_slice(input: &[f64], ratio: f64, out_len: usize) -> Vec<f64> {
    let table = kernel_table();
    let scale = ratio.min(1.0);
    let reach = KERNEL_ZERO_CROSSINGS as f64 / scale;
    let len = input.len() as isize;
    (0..out_len)
        .map(|m| {
            let t = m as f64 / ratio;
            let lo = ((t - reach).ceil() as isize).max(0);
            let hi = ((t + reach).floor() as isize).min(len - 1);
            let mut acc = 0.0;
            for k in lo..=hi {
                let u = (t - k as f64).abs() * scale * KERNEL_OVERSAMPLE as f64;
                let idx = u as usize;
                if idx >= table.len() - 1 {
                    continue;
                }
                let frac = u - idx as f64;
                let h = table[idx] + (table[idx + 1] - table[idx]) * frac;
                acc += input[k as usize] * h;
            }
            acc * scale
        })
        .collect()
}
