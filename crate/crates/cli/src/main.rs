use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use speechprep::alignment::align_chunks;
use speechprep::audio_io::{encode_wav, load_audio, wav_duration, TARGET_RATE};
use speechprep::augment::{apply_plan, derive_seed, plan_augmentation};
use speechprep::chunking::{chunk_for_inference, chunk_for_training};
use speechprep::config::PipelineConfig;
use speechprep::diar_formats::{
    filter_min_duration, parse_annotation_csv, parse_rttm, parse_uem, resolve_overlaps, segments_from_json,
    segments_to_json, write_lst, write_rttm, write_uem, DiarizationSegment, ManifestPaths, DEFAULT_MIN_DURATION_S,
};
use speechprep::metrics::{der, rtf, wer, DerReport, ScoringRegion, WerReport};
use speechprep::pipeline::{
    chunk_file_name, map_text_document, parse_hypotheses, prepare_asr_file, prepare_diar, to_jsonl, write_atomic,
    AlignmentEntry, AsrRecord, ChunkEntry, DiarInput,
};
use speechprep::postproc::postprocess_transcript;
use speechprep::textnorm::normalize_transcript;

#[derive(Parser)]
#[command(name = "speechprep", version, about = "Long-form Bangla speech dataset preparation and scoring")]
struct Cli {
    /// Pipeline config file of `key = value` lines
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override a config key; may be repeated
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    /// Number of files processed in parallel
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Split recordings into fixed-length chunks and list them as JSONL
    Chunk {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        /// Keep every chunk and zero-pad the last one
        #[arg(long)]
        inference: bool,
        /// Write chunk audio here
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Align per-chunk hypotheses to a full transcript
    Align {
        #[arg(long)]
        transcript: PathBuf,
        /// JSONL, one {"text": ...} per chunk
        #[arg(long)]
        hyps: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Normalize a text or JSONL transcript file
    Normalize {
        input: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Augment recordings with randomly placed acoustic effects
    Augment {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
        /// Overrides `global_seed`
        #[arg(long)]
        seed: Option<u64>,
        /// Dump each augmentation plan as JSON here
        #[arg(long)]
        plan_dir: Option<PathBuf>,
    },
    /// Remove hallucinated repetitions and speaker markers from ASR output
    Postprocess {
        input: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Convert diarization annotations between formats
    Convert {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long, value_enum)]
        from: SourceFormat,
        #[arg(long, value_enum)]
        to: TargetFormat,
        /// Recording URI for single-recording inputs (default: file stem)
        #[arg(long)]
        uri: Option<String>,
        /// Scored duration for UEM output (default: last segment end)
        #[arg(long)]
        duration: Option<f64>,
        /// Give overlapping speech to the earlier speaker
        #[arg(long)]
        resolve_overlaps: bool,
        /// Files reserved for the development split in manifest output
        #[arg(long, default_value_t = 2)]
        dev_count: usize,
        #[command(flatten)]
        manifest: ManifestArgs,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Drop diarization segments shorter than a minimum duration
    FilterDiar {
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = SegmentFormat::Rttm)]
        format: SegmentFormat,
        #[arg(long, default_value_t = DEFAULT_MIN_DURATION_S)]
        min_duration: f64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Compute WER, DER or RTF
    #[command(subcommand)]
    Score(Score),
    /// Build an ASR training manifest: chunk, align hypotheses, normalize
    PrepareAsr {
        /// WAV files or directories
        #[arg(long, required = true, num_args = 1..)]
        audio: Vec<PathBuf>,
        /// Directory of `<uri>.txt` transcripts
        #[arg(long)]
        transcripts: PathBuf,
        /// Directory of `<uri>.jsonl` chunk hypotheses
        #[arg(long)]
        hyps: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        /// Augment each chunk before writing it
        #[arg(long)]
        augment: bool,
    },
    /// Build diarization protocol files from CSV annotations
    PrepareDiar {
        /// Labeled CSV files or directories
        #[arg(long, required = true, num_args = 1..)]
        csv: Vec<PathBuf>,
        /// CSV files or directories for the test split
        #[arg(long, num_args = 1..)]
        test_csv: Vec<PathBuf>,
        /// Directory of `<uri>.wav` used for scored durations
        #[arg(long)]
        audio_dir: Option<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, default_value_t = 2)]
        dev_count: usize,
        #[command(flatten)]
        manifest: ManifestArgs,
    },
}

#[derive(Subcommand)]
enum Score {
    /// Word error rate for a file pair or two directories of `.txt` files
    Wer {
        #[arg(long = "ref")]
        reference: PathBuf,
        #[arg(long)]
        hyp: PathBuf,
        /// Score the texts as given, without normalization
        #[arg(long)]
        raw: bool,
    },
    /// Diarization error rate
    Der {
        #[arg(long = "ref")]
        reference: PathBuf,
        /// RTTM, or JSON segments for a single recording
        #[arg(long)]
        hyp: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        collar: f64,
        #[arg(long)]
        uem: Option<PathBuf>,
        /// Recording URI of a JSON hypothesis
        #[arg(long)]
        uri: Option<String>,
    },
    /// Real-time factor
    Rtf {
        /// Inference wall time in seconds
        #[arg(long)]
        time: f64,
        /// Audio duration in seconds
        #[arg(long, conflicts_with = "audio")]
        duration: Option<f64>,
        /// WAV files whose total duration is used
        #[arg(long, num_args = 1..)]
        audio: Vec<PathBuf>,
    },
}

#[derive(Args)]
struct ManifestArgs {
    #[arg(long, default_value = "Corpus")]
    database: String,
    #[arg(long, default_value = "Default")]
    protocol: String,
    #[arg(long, default_value = "wav")]
    audio_root: String,
    #[arg(long, default_value = "rttm")]
    rttm_root: String,
    #[arg(long, default_value = "uem")]
    uem_root: String,
    #[arg(long, default_value = "lst")]
    lst_root: String,
}

impl ManifestArgs {
    fn paths(&self) -> ManifestPaths {
        ManifestPaths {
            database: self.database.clone(),
            protocol: self.protocol.clone(),
            audio_root: self.audio_root.clone(),
            rttm_root: self.rttm_root.clone(),
            uem_root: self.uem_root.clone(),
            lst_root: self.lst_root.clone(),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SourceFormat {
    Csv,
    Rttm,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum TargetFormat {
    Rttm,
    Uem,
    Lst,
    Json,
    Manifest,
}

#[derive(Clone, Copy, ValueEnum)]
enum SegmentFormat {
    Rttm,
    Json,
}

/// Bad invocation that clap cannot catch; exits with status 2.
#[derive(Debug)]
struct Usage(String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("SPEECHPREP_LOG", "warn")).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<Usage>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

fn load_config(cli: &Cli) -> Result<PipelineConfig> {
    let usage = |e: String| anyhow!(Usage(e));
    let mut cfg = PipelineConfig::default();
    if let Some(path) = &cli.config {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        cfg.apply_text(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    }
    for item in &cli.overrides {
        let (key, value) = item
            .split_once('=')
            .ok_or_else(|| usage(format!("--set expects KEY=VALUE, got {item:?}")))?;
        cfg.set(key.trim(), value.trim()).map_err(|e| usage(e.to_string()))?;
    }
    if let Some(w) = cli.workers {
        cfg.workers = w;
    }
    cfg.validate().map_err(|e| usage(e.to_string()))?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<()> {
    let cfg = load_config(&cli)?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(cfg.workers).build()?;
    pool.install(|| dispatch(cli.command, &cfg))
}

fn dispatch(command: Command, cfg: &PipelineConfig) -> Result<()> {
    match command {
        Command::Chunk {
            inputs,
            inference,
            out_dir,
        } => cmd_chunk(&inputs, inference, out_dir.as_deref(), cfg),
        Command::Align {
            transcript,
            hyps,
            output,
        } => {
            let text = read(&transcript)?;
            let gt: Vec<&str> = text.split_whitespace().collect();
            let hyps = parse_hypotheses(&read(&hyps)?).with_context(|| hyps.display().to_string())?;
            let aligned = align_chunks(&gt, &hyps, &cfg.align)?;
            let entries: Vec<AlignmentEntry> = aligned.iter().map(|a| AlignmentEntry::new(a, &gt)).collect();
            emit(output.as_deref(), &to_jsonl(&entries))
        }
        Command::Normalize { input, output } => {
            let out = map_text_document(&read(&input)?, |t| normalize_transcript(t, &cfg.norm))?;
            emit(output.as_deref(), &out)
        }
        Command::Postprocess { input, output } => {
            let out = map_text_document(&read(&input)?, |t| postprocess_transcript(t, &cfg.dedup))?;
            emit(output.as_deref(), &out)
        }
        Command::Augment {
            inputs,
            out_dir,
            seed,
            plan_dir,
        } => cmd_augment(&inputs, &out_dir, seed, plan_dir.as_deref(), cfg),
        Command::Convert {
            inputs,
            from,
            to,
            uri,
            duration,
            resolve_overlaps,
            dev_count,
            manifest,
            output,
        } => {
            let out = convert(&inputs, from, to, uri, duration, resolve_overlaps, dev_count, &manifest)?;
            emit(output.as_deref(), &out)
        }
        Command::FilterDiar {
            input,
            format,
            min_duration,
            output,
        } => {
            let text = read(&input)?;
            let out = match format {
                SegmentFormat::Rttm => {
                    let mut out = String::new();
                    for (uri, segs) in parse_rttm(&text)? {
                        out.push_str(&write_rttm(&uri, &filter_min_duration(&segs, min_duration))?);
                    }
                    out
                }
                SegmentFormat::Json => {
                    let segs = segments_from_json(&text)?;
                    segments_to_json(&filter_min_duration(&segs, min_duration)) + "\n"
                }
            };
            emit(output.as_deref(), &out)
        }
        Command::Score(score) => cmd_score(score, cfg),
        Command::PrepareAsr {
            audio,
            transcripts,
            hyps,
            out_dir,
            augment,
        } => cmd_prepare_asr(&audio, &transcripts, &hyps, &out_dir, augment, cfg),
        Command::PrepareDiar {
            csv,
            test_csv,
            audio_dir,
            out_dir,
            dev_count,
            manifest,
        } => cmd_prepare_diar(&csv, &test_csv, audio_dir.as_deref(), &out_dir, dev_count, &manifest),
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn emit(output: Option<&Path>, text: &str) -> Result<()> {
    match output {
        Some(path) => write_atomic(path, text.as_bytes()).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string(value)?);
    Ok(())
}

fn uri_of(path: &Path) -> Result<String> {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .ok_or_else(|| anyhow!("{} has no file name", path.display()))
}

/// Expand directories into their files with the given extension, sorted.
fn expand(paths: &[PathBuf], extension: &str) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for p in paths {
        if p.is_dir() {
            let mut found: Vec<PathBuf> = fs::read_dir(p)
                .with_context(|| format!("listing {}", p.display()))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.is_file() && f.extension().is_some_and(|e| e.eq_ignore_ascii_case(extension)))
                .collect();
            found.sort();
            out.extend(found);
        } else {
            out.push(p.clone());
        }
    }
    Ok(out)
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn cmd_chunk(inputs: &[PathBuf], inference: bool, out_dir: Option<&Path>, cfg: &PipelineConfig) -> Result<()> {
    let files = expand(inputs, "wav")?;
    if let Some(dir) = out_dir {
        create_dir(dir)?;
    }
    let per_file: Vec<Result<Vec<ChunkEntry>>> = files
        .par_iter()
        .map(|path| {
            let uri = uri_of(path)?;
            let audio = load_audio(path, TARGET_RATE)?;
            let chunks = if inference {
                chunk_for_inference(&audio, &cfg.chunk)?
            } else {
                chunk_for_training(&audio, &cfg.chunk)?
            };
            let mut entries = Vec::with_capacity(chunks.len());
            for c in &chunks {
                let written = match out_dir {
                    Some(dir) => {
                        let dest = dir.join(chunk_file_name(&uri, c.index));
                        write_atomic(&dest, &encode_wav(&c.samples)?)?;
                        Some(dest.to_string_lossy().into_owned())
                    }
                    None => None,
                };
                entries.push(ChunkEntry::new(&uri, c, written));
            }
            Ok(entries)
        })
        .collect();
    let mut all = Vec::new();
    for (path, r) in files.iter().zip(per_file) {
        all.extend(r.with_context(|| path.display().to_string())?);
    }
    emit(None, &to_jsonl(&all))
}

#[derive(Serialize)]
struct AugmentSummary {
    uri: String,
    seed: u64,
    windows: usize,
    covered_s: f64,
    output: String,
}

fn cmd_augment(
    inputs: &[PathBuf],
    out_dir: &Path,
    seed: Option<u64>,
    plan_dir: Option<&Path>,
    cfg: &PipelineConfig,
) -> Result<()> {
    let files = expand(inputs, "wav")?;
    create_dir(out_dir)?;
    if let Some(dir) = plan_dir {
        create_dir(dir)?;
    }
    let global = seed.unwrap_or(cfg.global_seed);
    let results: Vec<Result<AugmentSummary>> = files
        .par_iter()
        .map(|path| {
            let uri = uri_of(path)?;
            let audio = load_audio(path, TARGET_RATE)?;
            let file_seed = derive_seed(global, &uri);
            let plan = plan_augmentation(audio.duration_seconds(), &cfg.augment, file_seed);
            let out = apply_plan(&audio, &plan);
            let dest = out_dir.join(format!("{uri}.wav"));
            write_atomic(&dest, &encode_wav(&out)?)?;
            if let Some(dir) = plan_dir {
                write_atomic(&dir.join(format!("{uri}.json")), serde_json::to_string_pretty(&plan)?.as_bytes())?;
            }
            Ok(AugmentSummary {
                uri,
                seed: file_seed,
                windows: plan.windows.len(),
                covered_s: plan.covered_s(),
                output: dest.to_string_lossy().into_owned(),
            })
        })
        .collect();
    let mut lines = Vec::new();
    for (path, r) in files.iter().zip(results) {
        lines.push(r.with_context(|| path.display().to_string())?);
    }
    emit(None, &to_jsonl(&lines))
}

/// Segments per URI read from one input file.
fn read_segments(
    path: &Path,
    from: SourceFormat,
    uri: Option<&str>,
) -> Result<BTreeMap<String, Vec<DiarizationSegment>>> {
    let text = read(path)?;
    let single = || -> Result<String> { uri.map(str::to_string).map_or_else(|| uri_of(path), Ok) };
    let mut out = BTreeMap::new();
    match from {
        SourceFormat::Csv => {
            out.insert(single()?, parse_annotation_csv(&text).with_context(|| path.display().to_string())?);
        }
        SourceFormat::Json => {
            out.insert(single()?, segments_from_json(&text).with_context(|| path.display().to_string())?);
        }
        SourceFormat::Rttm => out = parse_rttm(&text).with_context(|| path.display().to_string())?,
    }
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn convert(
    inputs: &[PathBuf],
    from: SourceFormat,
    to: TargetFormat,
    uri: Option<String>,
    duration: Option<f64>,
    resolve: bool,
    dev_count: usize,
    manifest: &ManifestArgs,
) -> Result<String> {
    if uri.is_some() && inputs.len() > 1 {
        return Err(Usage("--uri needs a single input".into()).into());
    }
    let mut recordings: BTreeMap<String, Vec<DiarizationSegment>> = BTreeMap::new();
    for path in inputs {
        for (u, segs) in read_segments(path, from, uri.as_deref())? {
            recordings.entry(u).or_default().extend(segs);
        }
    }
    if resolve {
        for segs in recordings.values_mut() {
            *segs = resolve_overlaps(segs);
        }
    }
    let end_of = |segs: &[DiarizationSegment]| segs.iter().map(|s| s.end_s).fold(0.0, f64::max);
    let mut out = String::new();
    match to {
        TargetFormat::Rttm => {
            for (u, segs) in &recordings {
                out.push_str(&write_rttm(u, segs)?);
            }
        }
        TargetFormat::Uem => {
            if duration.is_some() && recordings.len() > 1 {
                return Err(Usage("--duration needs a single recording".into()).into());
            }
            for (u, segs) in &recordings {
                out.push_str(&write_uem(u, duration.unwrap_or_else(|| end_of(segs)))?);
            }
        }
        TargetFormat::Lst => {
            let uris: Vec<&String> = recordings.keys().collect();
            out = write_lst(&uris)?;
        }
        TargetFormat::Json => {
            let mut iter = recordings.values();
            match (iter.next(), iter.next()) {
                (Some(segs), None) => out = segments_to_json(segs) + "\n",
                _ => bail!("JSON output holds exactly one recording, found {}", recordings.len()),
            }
        }
        TargetFormat::Manifest => {
            let labeled: Vec<DiarInput> = recordings
                .into_iter()
                .map(|(uri, segments)| DiarInput {
                    uri,
                    segments,
                    duration_s: None,
                })
                .collect();
            out = prepare_diar(&labeled, &[], dev_count, &manifest.paths())?.manifest;
        }
    }
    Ok(out)
}

#[derive(Serialize)]
struct FileWer {
    uri: String,
    #[serde(flatten)]
    report: WerReport,
}

#[derive(Serialize)]
struct WerSummary {
    files: Vec<FileWer>,
    aggregate: WerReport,
    macro_wer: f64,
}

#[derive(Serialize)]
struct FileDer {
    uri: String,
    #[serde(flatten)]
    report: DerReport,
}

#[derive(Serialize)]
struct DerSummary {
    files: Vec<FileDer>,
    aggregate: DerReport,
}

/// Pairs of (uri, reference path, hypothesis path) from two files or two directories.
fn text_pairs(reference: &Path, hyp: &Path) -> Result<Vec<(String, PathBuf, PathBuf)>> {
    match (reference.is_dir(), hyp.is_dir()) {
        (false, false) => Ok(vec![(uri_of(reference)?, reference.to_path_buf(), hyp.to_path_buf())]),
        (true, true) => expand(&[reference.to_path_buf()], "txt")?
            .into_iter()
            .map(|r| {
                let name = r.file_name().expect("listed files have names");
                let h = hyp.join(name);
                Ok((uri_of(&r)?, r, h))
            })
            .collect(),
        _ => Err(Usage("--ref and --hyp must both be files or both be directories".into()).into()),
    }
}

fn cmd_score(score: Score, cfg: &PipelineConfig) -> Result<()> {
    match score {
        Score::Wer { reference, hyp, raw } => {
            let pairs = text_pairs(&reference, &hyp)?;
            let prepare = |t: String| if raw { t } else { normalize_transcript(&t, &cfg.norm) };
            let results: Vec<Result<FileWer>> = pairs
                .par_iter()
                .map(|(uri, r, h)| {
                    let hyp_text = if h.exists() {
                        read(h)?
                    } else {
                        log::warn!("{uri}: no hypothesis at {}, scored as empty", h.display());
                        String::new()
                    };
                    let report = wer(&prepare(read(r)?), &prepare(hyp_text)).with_context(|| uri.clone())?;
                    Ok(FileWer {
                        uri: uri.clone(),
                        report,
                    })
                })
                .collect();
            let files = results.into_iter().collect::<Result<Vec<_>>>()?;
            let reports: Vec<WerReport> = files.iter().map(|f| f.report.clone()).collect();
            print_json(&WerSummary {
                aggregate: WerReport::micro_average(&reports),
                macro_wer: WerReport::macro_average(&reports),
                files,
            })
        }
        Score::Der {
            reference,
            hyp,
            collar,
            uem,
            uri,
        } => {
            let refs = parse_rttm(&read(&reference)?).with_context(|| reference.display().to_string())?;
            let hyp_text = read(&hyp)?;
            let hyps = if hyp.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
                let uri = match (uri, refs.len()) {
                    (Some(u), _) => u,
                    (None, 1) => refs.keys().next().cloned().expect("one key"),
                    _ => return Err(Usage("--uri is required for a JSON hypothesis".into()).into()),
                };
                BTreeMap::from([(uri, segments_from_json(&hyp_text)?)])
            } else {
                parse_rttm(&hyp_text).with_context(|| hyp.display().to_string())?
            };
            let mut regions: BTreeMap<String, Vec<ScoringRegion>> = BTreeMap::new();
            if let Some(path) = &uem {
                for line in parse_uem(&read(path)?).with_context(|| path.display().to_string())? {
                    regions.entry(line.uri).or_default().push(ScoringRegion {
                        start_s: line.onset_s,
                        end_s: line.offset_s,
                    });
                }
            }
            for u in hyps.keys().filter(|u| !refs.contains_key(*u)) {
                log::warn!("{u}: hypothesis has no reference, ignored");
            }
            let empty = Vec::new();
            let results: Vec<Result<FileDer>> = refs
                .par_iter()
                .map(|(u, r)| {
                    let h = hyps.get(u).unwrap_or(&empty);
                    let scoring = match &uem {
                        Some(_) => Some(regions.get(u).map(Vec::as_slice).unwrap_or(&[])),
                        None => None,
                    };
                    let report = der(&resolve_overlaps(r), h, collar, scoring).with_context(|| u.clone())?;
                    Ok(FileDer {
                        uri: u.clone(),
                        report,
                    })
                })
                .collect();
            let files = results.into_iter().collect::<Result<Vec<_>>>()?;
            let reports: Vec<DerReport> = files.iter().map(|f| f.report.clone()).collect();
            print_json(&DerSummary {
                aggregate: DerReport::micro_average(&reports)?,
                files,
            })
        }
        Score::Rtf { time, duration, audio } => {
            let total = match duration {
                Some(d) => d,
                None if audio.is_empty() => {
                    return Err(Usage("give --duration or --audio".into()).into());
                }
                None => expand(&audio, "wav")?
                    .iter()
                    .map(|p| wav_duration(p).with_context(|| p.display().to_string()))
                    .sum::<Result<f64>>()?,
            };
            print_json(&rtf(time, total)?)
        }
    }
}

#[derive(Serialize)]
struct AsrSummary {
    files: usize,
    records: usize,
    manifest: String,
}

fn cmd_prepare_asr(
    audio: &[PathBuf],
    transcripts: &Path,
    hyps: &Path,
    out_dir: &Path,
    augment: bool,
    cfg: &PipelineConfig,
) -> Result<()> {
    let files = expand(audio, "wav")?;
    let chunk_dir = out_dir.join("chunks");
    create_dir(&chunk_dir)?;
    let results: Vec<Result<Vec<AsrRecord>>> = files
        .par_iter()
        .map(|path| {
            let uri = uri_of(path)?;
            let buffer = load_audio(path, TARGET_RATE)?;
            let transcript = read(&transcripts.join(format!("{uri}.txt")))?;
            let hyp_path = hyps.join(format!("{uri}.jsonl"));
            let hyps = parse_hypotheses(&read(&hyp_path)?).with_context(|| hyp_path.display().to_string())?;
            Ok(prepare_asr_file(&uri, &buffer, &transcript, &hyps, cfg, &chunk_dir, augment)?)
        })
        .collect();
    let mut records = Vec::new();
    for (path, r) in files.iter().zip(results) {
        records.extend(r.with_context(|| path.display().to_string())?);
    }
    let manifest = out_dir.join("manifest.jsonl");
    write_atomic(&manifest, to_jsonl(&records).as_bytes())?;
    print_json(&AsrSummary {
        files: files.len(),
        records: records.len(),
        manifest: manifest.to_string_lossy().into_owned(),
    })
}

#[derive(Serialize)]
struct DiarSummary {
    splits: BTreeMap<String, usize>,
    manifest: String,
}

fn cmd_prepare_diar(
    csv: &[PathBuf],
    test_csv: &[PathBuf],
    audio_dir: Option<&Path>,
    out_dir: &Path,
    dev_count: usize,
    manifest: &ManifestArgs,
) -> Result<()> {
    let load = |paths: &[PathBuf]| -> Result<Vec<DiarInput>> {
        expand(paths, "csv")?
            .par_iter()
            .map(|path| {
                let uri = uri_of(path)?;
                let segments = parse_annotation_csv(&read(path)?).with_context(|| path.display().to_string())?;
                let duration_s = match audio_dir.map(|d| d.join(format!("{uri}.wav"))) {
                    Some(wav) if wav.exists() => Some(wav_duration(&wav)?),
                    _ => None,
                };
                Ok(DiarInput {
                    uri,
                    segments,
                    duration_s,
                })
            })
            .collect()
    };
    let labeled = load(csv)?;
    let test = load(test_csv)?;
    let protocol = prepare_diar(&labeled, &test, dev_count, &manifest.paths())?;

    let dirs = [
        (&manifest.rttm_root, &protocol.rttm, "rttm"),
        (&manifest.uem_root, &protocol.uem, "uem"),
        (&manifest.lst_root, &protocol.lst, "lst"),
    ];
    for (root, files, ext) in dirs {
        let dir = out_dir.join(root);
        create_dir(&dir)?;
        for (split, text) in files {
            write_atomic(&dir.join(format!("{split}.{ext}")), text.as_bytes())?;
        }
    }
    let manifest_path = out_dir.join("database.yml");
    write_atomic(&manifest_path, protocol.manifest.as_bytes())?;
    let splits = protocol
        .lst
        .iter()
        .map(|(split, lst)| (split.clone(), lst.lines().count()))
        .collect();
    print_json(&DiarSummary {
        splits,
        manifest: manifest_path.to_string_lossy().into_owned(),
    })
}
