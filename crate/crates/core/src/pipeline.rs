//! End-to-end dataset preparation built from the other modules.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::alignment::{align_chunks, AlignError, AlignedChunk};
use crate::audio_io::{encode_wav, AudioBuffer, AudioError};
use crate::augment::{augment_clip, derive_seed, AugmentError};
use crate::chunking::{chunk_for_training, ChunkError, ChunkRecord};
use crate::config::PipelineConfig;
use crate::diar_formats::{
    emit_corpus_manifest, resolve_overlaps, write_lst, write_rttm, write_uem, DiarizationSegment, FormatError,
    ManifestPaths,
};
use crate::textnorm::normalize_transcript;

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Audio(#[from] AudioError),
    #[error(transparent)]
    Chunk(#[from] ChunkError),
    #[error(transparent)]
    Align(#[from] AlignError),
    #[error(transparent)]
    Augment(#[from] AugmentError),
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Jsonl { line: usize, message: String },
    #[error("{uri}: {hyps} hypotheses for {chunks} chunks")]
    HypothesisCount { uri: String, hyps: usize, chunks: usize },
    #[error("{0}")]
    Invalid(String),
}

/// One line of the ASR training manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsrRecord {
    pub audio: String,
    pub start_s: f64,
    pub end_s: f64,
    pub text: String,
    pub score: f64,
}

/// One line of a chunk manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChunkEntry {
    pub uri: String,
    pub index: usize,
    pub start_s: f64,
    pub end_s: f64,
    pub padded: bool,
    /// Where the chunk audio was written, if it was.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub audio: Option<String>,
}

impl ChunkEntry {
    pub fn new(uri: &str, chunk: &ChunkRecord, audio: Option<String>) -> Self {
        Self {
            uri: uri.to_string(),
            audio,
            index: chunk.index,
            start_s: chunk.start_s,
            end_s: chunk.end_s,
            padded: chunk.padded,
        }
    }
}

/// One line of an alignment report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentEntry {
    pub chunk_index: usize,
    pub gt_start_word: usize,
    pub gt_end_word: usize,
    pub score: f64,
    pub low_confidence: bool,
    pub text: String,
}

impl AlignmentEntry {
    pub fn new(chunk: &AlignedChunk, gt_words: &[&str]) -> Self {
        Self {
            chunk_index: chunk.chunk_index,
            gt_start_word: chunk.gt_start_word,
            gt_end_word: chunk.gt_end_word,
            score: chunk.score,
            low_confidence: chunk.low_confidence,
            text: chunk.text(gt_words),
        }
    }
}

/// Indexed hypotheses are expanded to a dense list, so indices are capped.
pub const MAX_CHUNK_INDEX: usize = 1_000_000;

#[derive(Deserialize)]
struct HypothesisLine {
    #[serde(default)]
    chunk_index: Option<usize>,
    text: String,
}

/// Parse a hypothesis JSONL file: one `{"text": ..}` object per chunk, with an
/// optional `chunk_index`. Without indices, lines are taken in order; with
/// indices, missing chunks get an empty hypothesis.
pub fn parse_hypotheses(content: &str) -> Result<Vec<String>, PipelineError> {
    let mut indexed: BTreeMap<usize, String> = BTreeMap::new();
    let mut ordered = Vec::new();
    for (i, line) in content.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let err = |message: String| PipelineError::Jsonl { line: i + 1, message };
        let h: HypothesisLine = serde_json::from_str(line).map_err(|e| err(e.to_string()))?;
        match h.chunk_index {
            Some(idx) => {
                if idx >= MAX_CHUNK_INDEX {
                    return Err(err(format!("chunk_index {idx} out of range")));
                }
                if indexed.insert(idx, h.text).is_some() {
                    return Err(err(format!("duplicate chunk_index {idx}")));
                }
            }
            None => ordered.push(h.text),
        }
    }
    match (indexed.is_empty(), ordered.is_empty()) {
        (true, _) => Ok(ordered),
        (false, true) => {
            let n = indexed.keys().next_back().map_or(0, |k| k + 1);
            Ok((0..n).map(|k| indexed.remove(&k).unwrap_or_default()).collect())
        }
        (false, false) => Err(PipelineError::Invalid(
            "hypothesis lines mix indexed and unindexed entries".into(),
        )),
    }
}

/// Apply `f` to every line of plain text, or to the `text` field of every
/// JSONL object. A document whose first non-blank line starts with `{` is JSONL.
pub fn map_text_document(content: &str, f: impl Fn(&str) -> String) -> Result<String, PipelineError> {
    let jsonl = content
        .lines()
        .find(|l| !l.trim().is_empty())
        .is_some_and(|l| l.trim_start().starts_with('{'));
    let mut out = String::with_capacity(content.len());
    for (i, line) in content.lines().enumerate() {
        if jsonl && !line.trim().is_empty() {
            let err = |message: &str| PipelineError::Jsonl {
                line: i + 1,
                message: message.to_string(),
            };
            let mut value: serde_json::Value = serde_json::from_str(line).map_err(|e| err(&e.to_string()))?;
            let obj = value.as_object_mut().ok_or_else(|| err("expected a JSON object"))?;
            let text = obj
                .get("text")
                .and_then(|t| t.as_str())
                .ok_or_else(|| err("missing string field \"text\""))?;
            let mapped = f(text);
            obj.insert("text".into(), serde_json::Value::String(mapped));
            out.push_str(&value.to_string());
        } else if !jsonl {
            out.push_str(&f(line));
        }
        out.push('\n');
    }
    Ok(out)
}

/// Write `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

pub fn to_jsonl<T: Serialize>(records: &[T]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("records serialize"));
        out.push('\n');
    }
    out
}

pub fn chunk_file_name(uri: &str, index: usize) -> String {
    format!("{uri}_{index:05}.wav")
}

/// Chunk, align and normalize one recording. Chunk audio is written under
/// `chunk_dir`; when `augment` is set each chunk is augmented with a seed
/// derived from the global seed and `uri#index`.
///
/// Chunks whose alignment span is empty carry no text and are left out of
/// the manifest with a warning.
pub fn prepare_asr_file(
    uri: &str,
    audio: &AudioBuffer,
    transcript: &str,
    hyps: &[String],
    cfg: &PipelineConfig,
    chunk_dir: &Path,
    augment: bool,
) -> Result<Vec<AsrRecord>, PipelineError> {
    let chunks = chunk_for_training(audio, &cfg.chunk)?;
    if hyps.len() != chunks.len() {
        return Err(PipelineError::HypothesisCount {
            uri: uri.to_string(),
            hyps: hyps.len(),
            chunks: chunks.len(),
        });
    }
    let gt_words: Vec<&str> = transcript.split_whitespace().collect();
    let aligned = align_chunks(&gt_words, hyps, &cfg.align)?;

    let mut records = Vec::with_capacity(chunks.len());
    for (chunk, span) in chunks.iter().zip(&aligned) {
        if span.is_empty() {
            log::warn!("{uri}: chunk {} aligned to an empty span, skipped", chunk.index);
            continue;
        }
        if span.low_confidence {
            log::warn!("{uri}: chunk {} low-confidence alignment ({:.1})", chunk.index, span.score);
        }
        let text = normalize_transcript(&span.text(&gt_words), &cfg.norm);
        let samples = if augment {
            let seed = derive_seed(cfg.global_seed, &format!("{uri}#{}", chunk.index));
            augment_clip(&chunk.samples, &cfg.augment, seed)?
        } else {
            chunk.samples.clone()
        };
        let path = chunk_dir.join(chunk_file_name(uri, chunk.index));
        write_atomic(&path, &encode_wav(&samples)?)?;
        records.push(AsrRecord {
            audio: path.to_string_lossy().into_owned(),
            start_s: chunk.start_s,
            end_s: chunk.end_s,
            text,
            score: span.score,
        });
    }
    Ok(records)
}

/// One annotated recording for the diarization protocol.
#[derive(Debug, Clone, PartialEq)]
pub struct DiarInput {
    pub uri: String,
    pub segments: Vec<DiarizationSegment>,
    /// Scored duration; the last segment end is used when unknown.
    pub duration_s: Option<f64>,
}

/// Per-split protocol files plus the database manifest.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DiarProtocol {
    pub rttm: BTreeMap<String, String>,
    pub uem: BTreeMap<String, String>,
    pub lst: BTreeMap<String, String>,
    pub manifest: String,
}

/// Build train/development/test protocol files. The last `dev_count` labeled
/// recordings (by URI order) form the development split.
pub fn prepare_diar(
    labeled: &[DiarInput],
    test: &[DiarInput],
    dev_count: usize,
    paths: &ManifestPaths,
) -> Result<DiarProtocol, PipelineError> {
    if dev_count > labeled.len() {
        return Err(PipelineError::Invalid(format!(
            "development split of {dev_count} files needs at least that many labeled files, found {}",
            labeled.len()
        )));
    }
    let mut labeled: Vec<&DiarInput> = labeled.iter().collect();
    labeled.sort_by(|a, b| a.uri.cmp(&b.uri));
    let mut test: Vec<&DiarInput> = test.iter().collect();
    test.sort_by(|a, b| a.uri.cmp(&b.uri));
    let (train, dev) = labeled.split_at(labeled.len() - dev_count);

    let mut out = DiarProtocol::default();
    let mut uris: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for (split, files) in [("train", train), ("development", dev), ("test", &test[..])] {
        let mut rttm = String::new();
        let mut uem = String::new();
        for f in files {
            let resolved = resolve_overlaps(&f.segments);
            rttm.push_str(&write_rttm(&f.uri, &resolved)?);
            let duration = f
                .duration_s
                .unwrap_or_else(|| resolved.iter().map(|s| s.end_s).fold(0.0, f64::max));
            uem.push_str(&write_uem(&f.uri, duration)?);
        }
        let names: Vec<String> = files.iter().map(|f| f.uri.clone()).collect();
        let lst = if names.is_empty() { String::new() } else { write_lst(&names)? };
        out.rttm.insert(split.to_string(), rttm);
        out.uem.insert(split.to_string(), uem);
        out.lst.insert(split.to_string(), lst);
        uris.insert(split.to_string(), names);
    }
    out.manifest = emit_corpus_manifest(&uris, paths)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hypotheses_ordered_and_indexed() {
        let plain = "{\"text\":\"a b\"}\n\n{\"text\":\"c\"}\n";
        assert_eq!(parse_hypotheses(plain).unwrap(), vec!["a b", "c"]);
        assert!(parse_hypotheses("{\"chunk_index\":1000000000000,\"text\":\"x\"}").is_err());
        let indexed = "{\"chunk_index\":2,\"text\":\"z\"}\n{\"chunk_index\":0,\"text\":\"x\"}\n";
        assert_eq!(parse_hypotheses(indexed).unwrap(), vec!["x", "", "z"]);
        assert!(matches!(
            parse_hypotheses("{\"chunk_index\":0,\"text\":\"x\"}\n{\"chunk_index\":0,\"text\":\"y\"}"),
            Err(PipelineError::Jsonl { line: 2, .. })
        ));
        assert!(parse_hypotheses("not json").is_err());
    }

    #[test]
    fn map_document_modes() {
        let up = |s: &str| s.to_uppercase();
        assert_eq!(map_text_document("ab\ncd\n", up).unwrap(), "AB\nCD\n");
        let jsonl = "{\"id\":1,\"text\":\"ab\"}\n";
        assert_eq!(map_text_document(jsonl, up).unwrap(), "{\"id\":1,\"text\":\"AB\"}\n");
        assert!(map_text_document("{\"id\":1}\n", up).is_err());
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.txt");
        write_atomic(&path, b"one").unwrap();
        write_atomic(&path, b"two").unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), b"two");
    }

    fn input(uri: &str, end: f64) -> DiarInput {
        DiarInput {
            uri: uri.into(),
            segments: vec![
                DiarizationSegment::new(0.0, end, "A"),
                DiarizationSegment::new(end / 2.0, end + 1.0, "B"),
            ],
            duration_s: None,
        }
    }

    #[test]
    fn diar_split_takes_last_files_for_development() {
        let labeled = vec![input("f3", 4.0), input("f1", 2.0), input("f2", 3.0), input("f4", 5.0)];
        let paths = ManifestPaths {
            database: "db".into(),
            protocol: "p".into(),
            audio_root: "wav".into(),
            rttm_root: "rttm".into(),
            uem_root: "uem".into(),
            lst_root: "lst".into(),
        };
        let p = prepare_diar(&labeled, &[], 2, &paths).unwrap();
        assert_eq!(p.lst["train"], "f1\nf2\n");
        assert_eq!(p.lst["development"], "f3\nf4\n");
        assert_eq!(p.lst["test"], "");
        assert_eq!(p.uem["train"], "f1 1 0.000 3.000\nf2 1 0.000 4.000\n");
        // overlap goes to the earlier speaker
        assert!(p.rttm["train"].starts_with("SPEAKER f1 1 0.000 2.000 <NA> <NA> A <NA> <NA>\n"));
        assert!(p.manifest.contains("# 2 files"));
        assert!(prepare_diar(&labeled, &[], 5, &paths).is_err());
    }

    #[test]
    fn asr_file_end_to_end() {
        let rate = 16_000;
        let audio = AudioBuffer::new(
            (0..rate as usize * 60).map(|i| ((i as f32) * 0.01).sin() * 0.3).collect(),
            rate,
        )
        .unwrap();
        let gt: Vec<String> = (0..36).map(|i| format!("শব্দ{}", i % 7)).collect();
        let hyps: Vec<String> = gt.chunks(12).map(|c| c.join(" ")).collect();
        let dir = tempfile::tempdir().unwrap();
        let cfg = PipelineConfig::default();
        let recs = prepare_asr_file("u", &audio, &gt.join(" "), &hyps, &cfg, dir.path(), false).unwrap();
        assert_eq!(recs.len(), 3);
        assert_eq!(recs[0].start_s, 0.0);
        assert_eq!(recs[2].end_s, 60.0);
        assert!(dir.path().join("u_00002.wav").exists());
        let wrong = prepare_asr_file("u", &audio, "x", &hyps[..1], &cfg, dir.path(), false);
        assert!(matches!(wrong, Err(PipelineError::HypothesisCount { .. })));
    }
}
