//! Replays the checked-in fuzz corpus through the same entry points and
//! invariants as the fuzz targets, so the seeds stay meaningful on stable.

use std::collections::BTreeMap;
use std::fs;
use std::io::Cursor;
use std::path::PathBuf;

use speechprep::audio_io::{decode_wav, TARGET_RATE};
use speechprep::config::PipelineConfig;
use speechprep::diar_formats::{
    emit_corpus_manifest, parse_annotation_csv, parse_rttm, parse_uem, resolve_overlaps, segments_from_json,
    segments_to_json, write_rttm, ManifestPaths,
};
use speechprep::pipeline::parse_hypotheses;
use speechprep::postproc::{postprocess_transcript, DedupConfig};
use speechprep::textnorm::{normalize_transcript, NormConfig};
use speechprep_testkit as tk;

fn seeds(target: &str) -> Vec<(PathBuf, Vec<u8>)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut out: Vec<(PathBuf, Vec<u8>)> = fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| {
            let path = e.unwrap().path();
            let bytes = fs::read(&path).unwrap();
            (path, bytes)
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds for {target}");
    out
}

fn text_seeds(target: &str) -> Vec<(PathBuf, String)> {
    seeds(target)
        .into_iter()
        .map(|(p, b)| (p, String::from_utf8(b).unwrap()))
        .collect()
}

#[test]
fn csv_seeds() {
    for (path, text) in text_seeds("parse_annotation_csv") {
        let segs = parse_annotation_csv(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert!(segs.iter().all(|s| s.end_s > s.start_s));
        let resolved = resolve_overlaps(&segs);
        assert!(resolved.windows(2).all(|w| w[0].end_s <= w[1].start_s));
    }
}

#[test]
fn rttm_seeds() {
    for (path, text) in text_seeds("parse_rttm") {
        let parsed = parse_rttm(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert!(!parsed.is_empty());
        for (uri, segs) in parsed {
            let again = parse_rttm(&write_rttm(&uri, &segs).unwrap()).unwrap();
            assert_eq!(again[&uri].len(), segs.len());
        }
    }
}

#[test]
fn uem_seeds() {
    for (path, text) in text_seeds("parse_uem") {
        let lines = parse_uem(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert!(lines.iter().all(|l| l.offset_s > l.onset_s));
    }
}

#[test]
fn json_seeds() {
    for (path, text) in text_seeds("segments_json") {
        let segs = segments_from_json(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert_eq!(segments_from_json(&segments_to_json(&segs)).unwrap(), segs);
    }
}

#[test]
fn wav_seeds() {
    for (path, bytes) in seeds("decode_wav") {
        let res = decode_wav(Cursor::new(bytes), TARGET_RATE);
        let name = path.file_name().unwrap().to_string_lossy();
        if name.starts_with("truncated") {
            assert!(res.is_err(), "{name}");
        } else {
            let buf = res.unwrap_or_else(|e| panic!("{name}: {e}"));
            assert_eq!(buf.sample_rate, TARGET_RATE);
            assert!(!buf.is_empty());
        }
    }
}

#[test]
fn config_seeds() {
    for (path, text) in text_seeds("pipeline_config") {
        let cfg = PipelineConfig::parse(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert_eq!(PipelineConfig::parse(&cfg.to_text()).unwrap(), cfg);
    }
}

#[test]
fn text_seeds_are_idempotent() {
    let norm = NormConfig::default();
    for (_, text) in text_seeds("normalize_transcript") {
        let once = normalize_transcript(&text, &norm);
        assert_eq!(normalize_transcript(&once, &norm), once);
    }
    let dedup = DedupConfig::default();
    for (_, text) in text_seeds("postprocess_transcript") {
        let once = postprocess_transcript(&text, &dedup);
        assert_eq!(postprocess_transcript(&once, &dedup), once);
    }
}

#[test]
fn hypothesis_seeds() {
    for (path, text) in text_seeds("parse_hypotheses") {
        let hyps = parse_hypotheses(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert!(!hyps.is_empty());
    }
}

#[test]
fn manifest_matches_golden() {
    let split = |n: usize, prefix: &str| (1..=n).map(|i| format!("{prefix}{i:02}")).collect::<Vec<_>>();
    let mut splits = BTreeMap::new();
    splits.insert("train".to_string(), split(3, "rec"));
    splits.insert("development".to_string(), vec!["rec04".to_string(), "rec05".to_string()]);
    splits.insert("test".to_string(), split(1, "test"));
    let paths = ManifestPaths {
        database: "BanglaDiar".into(),
        protocol: "Competition".into(),
        audio_root: "data/wav".into(),
        rttm_root: "data/rttm".into(),
        uem_root: "data/uem".into(),
        lst_root: "data/lst".into(),
    };
    assert_eq!(emit_corpus_manifest(&splits, &paths).unwrap(), tk::fixture("database.yml"));
}
