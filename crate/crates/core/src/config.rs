//! Flat `key = value` pipeline configuration.
//!
//! Every key names a field of one of the typed configs. Intervals are written
//! `lo,hi`; `allowed_punct` lists its characters with no separator; `#`
//! starts a comment line.

use std::fmt::Write as _;
use std::str::FromStr;

use crate::alignment::AlignConfig;
use crate::augment::{AugmentConfig, Interval};
use crate::chunking::ChunkConfig;
use crate::postproc::DedupConfig;
use crate::textnorm::NormConfig;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("unknown config key {0:?}")]
    UnknownKey(String),
    #[error("bad value {value:?} for {key}: {reason}")]
    BadValue {
        key: String,
        value: String,
        reason: String,
    },
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub global_seed: u64,
    pub chunk: ChunkConfig,
    pub align: AlignConfig,
    pub norm: NormConfig,
    pub augment: AugmentConfig,
    pub dedup: DedupConfig,
    pub workers: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            global_seed: 0,
            chunk: ChunkConfig::default(),
            align: AlignConfig::default(),
            norm: NormConfig::default(),
            augment: AugmentConfig::default(),
            dedup: DedupConfig::default(),
            workers: 1,
        }
    }
}

fn scalar<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    let bad = |reason: String| ConfigError::BadValue {
        key: key.to_string(),
        value: value.to_string(),
        reason,
    };
    // NaN and infinities would slip past every range check below
    if value.parse::<f64>().is_ok_and(|v| !v.is_finite()) {
        return Err(bad("not a finite number".into()));
    }
    value.parse().map_err(|e: T::Err| bad(e.to_string()))
}

fn pair<T: FromStr>(key: &str, value: &str) -> Result<(T, T), ConfigError>
where
    T::Err: std::fmt::Display,
{
    let (a, b) = value.split_once(',').ok_or_else(|| ConfigError::BadValue {
        key: key.to_string(),
        value: value.to_string(),
        reason: "expected `lo,hi`".into(),
    })?;
    Ok((scalar(key, a.trim())?, scalar(key, b.trim())?))
}

impl PipelineConfig {
    /// Parse a config file on top of the defaults.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        cfg.apply_text(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn apply_text(&mut self, text: &str) -> Result<(), ConfigError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or(ConfigError::Syntax { line: i + 1 })?;
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    /// Set one field by its key name.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let a = &mut self.augment;
        match key {
            "global_seed" => self.global_seed = scalar(key, value)?,
            "workers" => self.workers = scalar(key, value)?,
            "chunk_seconds" => self.chunk.chunk_seconds = scalar(key, value)?,
            "min_tail_seconds" => self.chunk.min_tail_seconds = scalar(key, value)?,
            "silence_rms_threshold" => self.chunk.silence_rms_threshold = scalar(key, value)?,
            "window_words" => self.align.window_words = scalar(key, value)?,
            "span_delta_words" => self.align.span_delta_words = scalar(key, value)?,
            "low_confidence_threshold" => self.align.low_confidence_threshold = scalar(key, value)?,
            "year_range" => self.norm.year_range = pair(key, value)?,
            "allowed_punct" => self.norm.allowed_punct = value.chars().filter(|c| !c.is_whitespace()).collect(),
            "strip_joiners" => self.norm.strip_joiners = scalar(key, value)?,
            "coverage" => a.coverage = scalar(key, value)?,
            "window_s" => a.window_s = pair(key, value)?,
            "p_noise" => a.p_noise = scalar(key, value)?,
            "p_echo" => a.p_echo = scalar(key, value)?,
            "p_reverb" => a.p_reverb = scalar(key, value)?,
            "p_clip" => a.p_clip = scalar(key, value)?,
            "p_bandpass" => a.p_bandpass = scalar(key, value)?,
            "p_pitch" => a.p_pitch = scalar(key, value)?,
            "p_stretch" => a.p_stretch = scalar(key, value)?,
            "snr_db" => a.snr_db = pair(key, value)?,
            "echo_taps" => a.echo_taps = pair(key, value)?,
            "echo_delay_ms" => a.echo_delay_ms = pair(key, value)?,
            "echo_decay" => a.echo_decay = pair(key, value)?,
            "rt60_small" => a.rt60_small = pair(key, value)?,
            "rt60_medium" => a.rt60_medium = pair(key, value)?,
            "rt60_large" => a.rt60_large = pair(key, value)?,
            "clip_frac" => a.clip_frac = pair(key, value)?,
            "band_hz" => a.band_hz = pair(key, value)?,
            "pitch_semitones" => a.pitch_semitones = pair(key, value)?,
            "stretch_rate" => a.stretch_rate = pair(key, value)?,
            "max_phrase_words" => self.dedup.max_phrase_words = scalar(key, value)?,
            "phrase_min_repeats" => self.dedup.phrase_min_repeats = scalar(key, value)?,
            "word_min_repeats" => self.dedup.word_min_repeats = scalar(key, value)?,
            "ngram_chars" => self.dedup.ngram_chars = pair(key, value)?,
            "ngram_min_repeats" => self.dedup.ngram_min_repeats = scalar(key, value)?,
            "max_iterations" => self.dedup.max_iterations = scalar(key, value)?,
            _ => return Err(ConfigError::UnknownKey(key.to_string())),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |e: String| ConfigError::Invalid(e);
        if self.workers == 0 {
            return Err(invalid("workers must be at least 1".into()));
        }
        self.chunk.validate().map_err(|e| invalid(e.to_string()))?;
        self.norm.validate().map_err(invalid)?;
        self.augment.validate().map_err(|e| invalid(e.to_string()))?;
        self.dedup.validate().map_err(invalid)?;
        Ok(())
    }

    /// Render every key; parsing the result reproduces `self`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        let iv = |(lo, hi): Interval| format!("{lo},{hi}");
        let a = &self.augment;
        kv("global_seed", self.global_seed.to_string());
        kv("workers", self.workers.to_string());
        kv("chunk_seconds", self.chunk.chunk_seconds.to_string());
        kv("min_tail_seconds", self.chunk.min_tail_seconds.to_string());
        kv("silence_rms_threshold", self.chunk.silence_rms_threshold.to_string());
        kv("window_words", self.align.window_words.to_string());
        kv("span_delta_words", self.align.span_delta_words.to_string());
        kv("low_confidence_threshold", self.align.low_confidence_threshold.to_string());
        kv("year_range", format!("{},{}", self.norm.year_range.0, self.norm.year_range.1));
        kv("allowed_punct", self.norm.allowed_punct.iter().collect());
        kv("strip_joiners", self.norm.strip_joiners.to_string());
        kv("coverage", a.coverage.to_string());
        kv("window_s", iv(a.window_s));
        kv("p_noise", a.p_noise.to_string());
        kv("p_echo", a.p_echo.to_string());
        kv("p_reverb", a.p_reverb.to_string());
        kv("p_clip", a.p_clip.to_string());
        kv("p_bandpass", a.p_bandpass.to_string());
        kv("p_pitch", a.p_pitch.to_string());
        kv("p_stretch", a.p_stretch.to_string());
        kv("snr_db", iv(a.snr_db));
        kv("echo_taps", format!("{},{}", a.echo_taps.0, a.echo_taps.1));
        kv("echo_delay_ms", iv(a.echo_delay_ms));
        kv("echo_decay", iv(a.echo_decay));
        kv("rt60_small", iv(a.rt60_small));
        kv("rt60_medium", iv(a.rt60_medium));
        kv("rt60_large", iv(a.rt60_large));
        kv("clip_frac", iv(a.clip_frac));
        kv("band_hz", iv(a.band_hz));
        kv("pitch_semitones", iv(a.pitch_semitones));
        kv("stretch_rate", iv(a.stretch_rate));
        kv("max_phrase_words", self.dedup.max_phrase_words.to_string());
        kv("phrase_min_repeats", self.dedup.phrase_min_repeats.to_string());
        kv("word_min_repeats", self.dedup.word_min_repeats.to_string());
        kv("ngram_chars", format!("{},{}", self.dedup.ngram_chars.0, self.dedup.ngram_chars.1));
        kv("ngram_min_repeats", self.dedup.ngram_min_repeats.to_string());
        kv("max_iterations", self.dedup.max_iterations.to_string());
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let cfg = PipelineConfig::default();
        assert_eq!(PipelineConfig::parse(&cfg.to_text()).unwrap(), cfg);
    }

    #[test]
    fn overrides_apply() {
        let cfg = PipelineConfig::parse("# comment\np_noise = 0.1\nwindow_s = 2, 4\nallowed_punct = ।?\n").unwrap();
        assert_eq!(cfg.augment.p_noise, 0.1);
        assert_eq!(cfg.augment.window_s, (2.0, 4.0));
        assert_eq!(cfg.norm.allowed_punct.len(), 2);
    }

    #[test]
    fn errors() {
        assert_eq!(PipelineConfig::parse("nope"), Err(ConfigError::Syntax { line: 1 }));
        assert_eq!(
            PipelineConfig::parse("bogus = 1"),
            Err(ConfigError::UnknownKey("bogus".into()))
        );
        assert!(matches!(PipelineConfig::parse("p_echo = x"), Err(ConfigError::BadValue { .. })));
        assert!(matches!(PipelineConfig::parse("p_echo = 2"), Err(ConfigError::Invalid(_))));
        assert!(matches!(PipelineConfig::parse("workers = 0"), Err(ConfigError::Invalid(_))));
        assert!(matches!(PipelineConfig::parse("p_echo = NaN"), Err(ConfigError::BadValue { .. })));
        assert!(matches!(PipelineConfig::parse("snr_db = 0,inf"), Err(ConfigError::BadValue { .. })));
    }
}
