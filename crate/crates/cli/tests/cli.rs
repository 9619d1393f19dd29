use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use speechprep::audio_io::{save_audio, AudioBuffer};
use speechprep_testkit as tk;

fn speechprep(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_speechprep"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn write_tone(path: &Path, seconds: f64, freq: f64) {
    let samples: Vec<f32> = tk::sine(freq, 0.4, 16_000.0, (seconds * 16_000.0) as usize)
        .into_iter()
        .map(|s| s as f32)
        .collect();
    save_audio(&AudioBuffer::new(samples, 16_000).unwrap(), path).unwrap();
}

#[test]
fn wer_on_identical_files_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    let r = dir.path().join("r.txt");
    let h = dir.path().join("h.txt");
    fs::write(&r, "আমি ভাত খাই\n").unwrap();
    fs::write(&h, "আমি ভাত খাই\n").unwrap();
    let out = speechprep(&["score", "wer", "--ref", p(&r), "--hyp", p(&h)]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("\"wer\":0.0"), "{}", stdout(&out));
}

#[test]
fn wer_over_directories_micro_averages() {
    let dir = tempfile::tempdir().unwrap();
    let (r, h) = (dir.path().join("ref"), dir.path().join("hyp"));
    fs::create_dir_all(&r).unwrap();
    fs::create_dir_all(&h).unwrap();
    fs::write(r.join("a.txt"), "ক খ গ").unwrap();
    fs::write(h.join("a.txt"), "ক ঘ গ ঙ").unwrap();
    fs::write(r.join("b.txt"), "ক").unwrap();
    fs::write(h.join("b.txt"), "ক").unwrap();
    let out = speechprep(&["score", "wer", "--ref", p(&r), "--hyp", p(&h)]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["files"].as_array().unwrap().len(), 2);
    assert_eq!(v["aggregate"]["N"], 4);
    assert_eq!(v["aggregate"]["wer"], 0.5);
}

#[test]
fn inference_chunking_lists_three_chunks_for_a_minute() {
    let dir = tempfile::tempdir().unwrap();
    let wav = dir.path().join("in.wav");
    write_tone(&wav, 60.0, 440.0);
    let out = speechprep(&["chunk", "--inference", p(&wav)]);
    assert_eq!(out.status.code(), Some(0));
    let lines: Vec<serde_json::Value> = stdout(&out).lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 3);
    assert_eq!(lines[2]["padded"], true);

    let chunks = dir.path().join("chunks");
    let out = speechprep(&["chunk", p(&wav), "--out-dir", p(&chunks)]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out).lines().count(), 3);
    assert!(chunks.join("in_00002.wav").exists());
}

#[test]
fn csv_to_rttm_matches_golden_line() {
    let out = speechprep(&[
        "convert",
        "--from",
        "csv",
        "--to",
        "rttm",
        p(&tk::fixture_path("file1.csv")),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out), tk::fixture("file1.rttm"));
}

#[test]
fn convert_other_targets() {
    let csv = tk::fixture_path("file1.csv");
    let run = |to: &str, extra: &[&str]| {
        let mut args = vec!["convert", "--from", "csv", "--to", to, p(&csv)];
        args.extend_from_slice(extra);
        let out = speechprep(&args);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        stdout(&out)
    };
    assert_eq!(run("uem", &["--duration", "120"]), tk::fixture("file1.uem"));
    assert_eq!(run("lst", &[]), "file1\n");
    assert_eq!(run("json", &["--uri", "x"]), "[{\"start\":1.0,\"end\":5.0,\"speaker\":\"SPK1\"}]\n");
    assert!(run("manifest", &["--dev-count", "0"]).contains("# 1 file\n"));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(speechprep(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(speechprep(&["score", "wer", "--bogus"]).status.code(), Some(2));
    let out = speechprep(&["--set", "no_such_key=1", "score", "rtf", "--time", "1", "--duration", "2"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no_such_key"));
}

#[test]
fn processing_failures_exit_one() {
    let out = speechprep(&["normalize", "/definitely/not/here.txt"]);
    assert_eq!(out.status.code(), Some(1));
    let out = speechprep(&["score", "rtf", "--time", "0", "--duration", "2"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn rtf_report() {
    let out = speechprep(&["score", "rtf", "--time", "13080", "--duration", "78842"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!((v["rtf"].as_f64().unwrap() - 0.1659).abs() < 1e-4);
    assert_eq!(v["T"], 13080.0);
}

#[test]
fn der_report_with_json_hypothesis() {
    let dir = tempfile::tempdir().unwrap();
    let r = dir.path().join("ref.rttm");
    let h = dir.path().join("hyp.json");
    fs::write(
        &r,
        "SPEAKER f 1 0.000 10.000 <NA> <NA> A <NA> <NA>\nSPEAKER f 1 20.000 90.000 <NA> <NA> B <NA> <NA>\n",
    )
    .unwrap();
    fs::write(
        &h,
        "[{\"start\":1.0,\"end\":11.0,\"speaker\":\"x\"},{\"start\":20.0,\"end\":110.0,\"speaker\":\"y\"}]",
    )
    .unwrap();
    let out = speechprep(&["score", "der", "--ref", p(&r), "--hyp", p(&h)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!((v["aggregate"]["der"].as_f64().unwrap() - 0.02).abs() < 1e-9);
    assert_eq!(v["files"][0]["mapping"]["x"], "A");
}

#[test]
fn normalize_and_postprocess_text_and_jsonl() {
    let dir = tempfile::tempdir().unwrap();
    let txt = dir.path().join("t.txt");
    fs::write(&txt, "hello  5 টাকা\n1971\n").unwrap();
    let out = speechprep(&["normalize", p(&txt)]);
    assert_eq!(stdout(&out), "পাঁচ টাকা\nউনিশশো একাত্তর\n");

    let jsonl = dir.path().join("t.jsonl");
    fs::write(&jsonl, "{\"id\":\"a\",\"text\":\">> ভালো ভালো ভালো ভালো\"}\n").unwrap();
    let dest = dir.path().join("out.jsonl");
    let out = speechprep(&["postprocess", p(&jsonl), "-o", p(&dest)]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(fs::read_to_string(&dest).unwrap(), "{\"id\":\"a\",\"text\":\"ভালো ভালো\"}\n");
}

#[test]
fn filter_diar_keeps_boundary_segment() {
    let dir = tempfile::tempdir().unwrap();
    let r = dir.path().join("in.rttm");
    fs::write(
        &r,
        "SPEAKER f 1 0.000 0.300 <NA> <NA> A <NA> <NA>\nSPEAKER f 1 1.000 0.200 <NA> <NA> B <NA> <NA>\n",
    )
    .unwrap();
    let out = speechprep(&["filter-diar", p(&r)]);
    assert_eq!(stdout(&out), "SPEAKER f 1 0.000 0.300 <NA> <NA> A <NA> <NA>\n");
}

#[test]
fn align_emits_one_line_per_hypothesis() {
    let dir = tempfile::tempdir().unwrap();
    let gt = dir.path().join("gt.txt");
    let hyps = dir.path().join("h.jsonl");
    fs::write(&gt, "এক দুই তিন চার পাঁচ ছয়").unwrap();
    fs::write(&hyps, "{\"text\":\"এক দুই তিন\"}\n{\"text\":\"চার পাঁচ ছয়\"}\n").unwrap();
    let out = speechprep(&["align", "--transcript", p(&gt), "--hyps", p(&hyps)]);
    let lines: Vec<serde_json::Value> = stdout(&out).lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[1]["gt_start_word"], 3);
    assert_eq!(lines[1]["text"], "চার পাঁচ ছয়");
}

fn tree_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let path = e.unwrap().path();
            (path.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&path).unwrap())
        })
        .collect();
    out.sort();
    out
}

#[test]
fn augment_output_is_independent_of_worker_count() {
    let dir = tempfile::tempdir().unwrap();
    let inputs = dir.path().join("in");
    fs::create_dir_all(&inputs).unwrap();
    for (i, f) in [220.0, 330.0, 440.0].iter().enumerate() {
        write_tone(&inputs.join(format!("clip{i}.wav")), 20.0, *f);
    }
    let run = |workers: &str, out: &str| {
        let out_dir = dir.path().join(out);
        let plans = dir.path().join(format!("{out}_plans"));
        let o = speechprep(&[
            "augment",
            p(&inputs),
            "--out-dir",
            p(&out_dir),
            "--plan-dir",
            p(&plans),
            "--seed",
            "42",
            "--workers",
            workers,
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        (stdout(&o), tree_bytes(&out_dir), tree_bytes(&plans))
    };
    let one = run("1", "a");
    let four = run("4", "b");
    assert_eq!(one.1, four.1);
    assert_eq!(one.2, four.2);
    assert_eq!(one.0.replace("/a/", "/b/"), four.0);
    assert_eq!(one.1.len(), 3);
    // a different seed changes the output
    let config = dir.path().join("cfg.txt");
    fs::write(&config, "global_seed = 7\n").unwrap();
    let o = speechprep(&["--config", p(&config), "augment", p(&inputs), "--out-dir", p(&dir.path().join("c"))]);
    assert_eq!(o.status.code(), Some(0));
    assert_ne!(tree_bytes(&dir.path().join("c")), one.1);
}

#[test]
fn prepare_diar_writes_protocol() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("csv");
    fs::create_dir_all(&csv).unwrap();
    for i in 1..=4 {
        fs::write(
            csv.join(format!("rec{i}.csv")),
            "start,end,speaker\n00:00:00,00:00:10,A\n00:00:05,00:00:12,B\n",
        )
        .unwrap();
    }
    let out_dir = dir.path().join("out");
    let out = speechprep(&["prepare-diar", "--csv", p(&csv), "--out-dir", p(&out_dir)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["splits"]["train"], 2);
    assert_eq!(v["splits"]["development"], 2);
    assert_eq!(v["splits"]["test"], 0);
    assert_eq!(fs::read_to_string(out_dir.join("lst/development.lst")).unwrap(), "rec3\nrec4\n");
    let rttm = fs::read_to_string(out_dir.join("rttm/train.rttm")).unwrap();
    assert!(rttm.contains("SPEAKER rec1 1 10.000 2.000 <NA> <NA> B <NA> <NA>\n"));
    assert_eq!(
        fs::read_to_string(out_dir.join("uem/train.uem")).unwrap(),
        "rec1 1 0.000 12.000\nrec2 1 0.000 12.000\n"
    );
    assert!(fs::read_to_string(out_dir.join("database.yml")).unwrap().contains("annotated: uem/test.uem"));
}

#[test]
fn prepare_asr_builds_manifest_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let (audio, text, hyps) = (dir.path().join("wav"), dir.path().join("txt"), dir.path().join("hyp"));
    for d in [&audio, &text, &hyps] {
        fs::create_dir_all(d).unwrap();
    }
    let c = tk::gen_synthetic_alignment_case(60, 20, 0.1, 3).unwrap();
    for (name, secs) in [("a", 60.0), ("b", 55.0)] {
        write_tone(&audio.join(format!("{name}.wav")), secs, 300.0);
        fs::write(text.join(format!("{name}.txt")), c.gt_words.join(" ")).unwrap();
        let lines: String = c.chunk_hyps.iter().map(|h| format!("{{\"text\":\"{h}\"}}\n")).collect();
        fs::write(hyps.join(format!("{name}.jsonl")), lines).unwrap();
    }
    let run = |workers: &str, out: &str| {
        let out_dir = dir.path().join(out);
        let o = speechprep(&[
            "prepare-asr",
            "--audio",
            p(&audio),
            "--transcripts",
            p(&text),
            "--hyps",
            p(&hyps),
            "--out-dir",
            p(&out_dir),
            "--augment",
            "--workers",
            workers,
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        (
            fs::read_to_string(out_dir.join("manifest.jsonl")).unwrap(),
            tree_bytes(&out_dir.join("chunks")),
        )
    };
    let (manifest, chunks) = run("1", "one");
    let lines: Vec<serde_json::Value> = manifest.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 6);
    for l in &lines {
        for key in ["audio", "start_s", "end_s", "text", "score"] {
            assert!(l.get(key).is_some(), "{key} missing from {l}");
        }
    }
    let (manifest4, chunks4) = run("3", "three");
    assert_eq!(manifest.replace("/one/", "/three/"), manifest4);
    assert_eq!(chunks, chunks4);
}
