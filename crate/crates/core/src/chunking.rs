//! Fixed-length, non-overlapping segmentation of long recordings.
//!
//! Training mode drops a short or silent trailing fragment; inference mode
//! zero-pads the final chunk so that every chunk has the same length.

use serde::{Deserialize, Serialize};

use crate::audio_io::AudioBuffer;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ChunkError {
    #[error("empty audio buffer")]
    EmptyBuffer,
    #[error("invalid chunk config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChunkConfig {
    pub chunk_seconds: f64,
    pub min_tail_seconds: f64,
    pub silence_rms_threshold: f64,
}

impl Default for ChunkConfig {
    fn default() -> Self {
        Self {
            chunk_seconds: 25.0,
            min_tail_seconds: 0.5,
            silence_rms_threshold: 1e-4,
        }
    }
}

impl ChunkConfig {
    pub fn validate(&self) -> Result<(), ChunkError> {
        if !(self.chunk_seconds > self.min_tail_seconds && self.min_tail_seconds > 0.0) {
            return Err(ChunkError::InvalidConfig(format!(
                "need chunk_seconds > min_tail_seconds > 0, got {} and {}",
                self.chunk_seconds, self.min_tail_seconds
            )));
        }
        if !(self.silence_rms_threshold >= 0.0) {
            return Err(ChunkError::InvalidConfig(
                "silence_rms_threshold must be non-negative".into(),
            ));
        }
        Ok(())
    }

    fn chunk_samples(&self, rate: u32) -> usize {
        (self.chunk_seconds * rate as f64).round() as usize
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChunkRecord {
    pub index: usize,
    pub start_s: f64,
    /// End of the source material covered by this chunk (padding excluded).
    pub end_s: f64,
    /// Sample offset of the chunk start in the source.
    pub offset: usize,
    pub samples: AudioBuffer,
    pub padded: bool,
}

impl ChunkRecord {
    /// Number of samples taken from the source.
    pub fn source_len(&self) -> usize {
        let rate = self.samples.sample_rate as f64;
        ((self.end_s - self.start_s) * rate).round() as usize
    }
}

fn rms(samples: &[f32]) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    (samples.iter().map(|&s| (s as f64).powi(2)).sum::<f64>() / samples.len() as f64).sqrt()
}

fn record(buffer: &AudioBuffer, index: usize, offset: usize, end: usize, pad_to: Option<usize>) -> ChunkRecord {
    let rate = buffer.sample_rate;
    let mut samples = buffer.samples[offset..end].to_vec();
    let padded = match pad_to {
        Some(n) if samples.len() < n => {
            samples.resize(n, 0.0);
            true
        }
        _ => false,
    };
    ChunkRecord {
        index,
        start_s: offset as f64 / rate as f64,
        end_s: end as f64 / rate as f64,
        offset,
        samples: AudioBuffer {
            samples,
            sample_rate: rate,
        },
        padded,
    }
}

/// Split for training. The trailing partial fragment is dropped when it is
/// shorter than `min_tail_seconds` or its RMS is below `silence_rms_threshold`.
pub fn chunk_for_training(buffer: &AudioBuffer, cfg: &ChunkConfig) -> Result<Vec<ChunkRecord>, ChunkError> {
    cfg.validate()?;
    if buffer.is_empty() {
        return Err(ChunkError::EmptyBuffer);
    }
    let step = cfg.chunk_samples(buffer.sample_rate);
    let total = buffer.len();
    let mut out = Vec::with_capacity(total / step + 1);
    let mut offset = 0;
    while offset < total {
        let end = (offset + step).min(total);
        if end - offset < step {
            let tail = &buffer.samples[offset..end];
            let tail_seconds = tail.len() as f64 / buffer.sample_rate as f64;
            if tail_seconds < cfg.min_tail_seconds || rms(tail) < cfg.silence_rms_threshold {
                log::debug!("dropping {tail_seconds:.3} s trailing fragment");
                break;
            }
        }
        out.push(record(buffer, out.len(), offset, end, None));
        offset = end;
    }
    Ok(out)
}

/// Split for inference: nothing is dropped and the last chunk is zero-padded
/// to the full chunk length.
pub fn chunk_for_inference(buffer: &AudioBuffer, cfg: &ChunkConfig) -> Result<Vec<ChunkRecord>, ChunkError> {
    cfg.validate()?;
    if buffer.is_empty() {
        return Err(ChunkError::EmptyBuffer);
    }
    let step = cfg.chunk_samples(buffer.sample_rate);
    let total = buffer.len();
    Ok((0..total.div_ceil(step))
        .map(|i| {
            let offset = i * step;
            record(buffer, i, offset, (offset + step).min(total), Some(step))
        })
        .collect())
}
