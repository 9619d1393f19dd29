//! Diarization annotation formats and segment policies.
//!
//! RTTM SPEAKER records, UEM scoring regions, LST URI lists, JSON segment
//! arrays and a pyannote-style `database.yml` protocol manifest.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

/// Shortest segment kept by the post-processing filter, in seconds.
pub const DEFAULT_MIN_DURATION_S: f64 = 0.3;
/// Slack for duration comparisons so that e.g. 1.1..1.4 counts as 0.3 s.
const DURATION_EPS: f64 = 1e-9;

pub const REQUIRED_SPLITS: [&str; 3] = ["train", "development", "test"];

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum FormatError {
    #[error("line {line}, column {column}: malformed time {value:?}")]
    MalformedTime {
        line: usize,
        column: usize,
        value: String,
    },
    #[error("line {line}: end before start ({start} >= {end})")]
    EndBeforeStart { line: usize, start: f64, end: f64 },
    #[error("line {line}: expected at least {expected} fields, found {found}")]
    MissingFields {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: empty speaker label")]
    EmptySpeaker { line: usize },
    #[error("line {line}: malformed {field} field {value:?}")]
    MalformedField {
        line: usize,
        field: &'static str,
        value: String,
    },
    #[error("line {line}: non-positive duration {duration}")]
    NonPositiveDuration { line: usize, duration: f64 },
    #[error("csv: {0}")]
    Csv(String),
    #[error("{what} {value:?} contains whitespace")]
    Whitespace { what: &'static str, value: String },
    #[error("duration must be positive, got {0}")]
    NonPositiveTotal(f64),
    #[error("no URIs to list")]
    EmptyList,
    #[error("missing split {0:?}")]
    MissingSplit(String),
    #[error("invalid segment JSON: {0}")]
    Json(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiarizationSegment {
    #[serde(rename = "start")]
    pub start_s: f64,
    #[serde(rename = "end")]
    pub end_s: f64,
    pub speaker: String,
}

impl DiarizationSegment {
    pub fn new(start_s: f64, end_s: f64, speaker: impl Into<String>) -> Self {
        Self {
            start_s,
            end_s,
            speaker: speaker.into(),
        }
    }

    pub fn duration(&self) -> f64 {
        self.end_s - self.start_s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UemLine {
    pub uri: String,
    pub onset_s: f64,
    pub offset_s: f64,
}

/// Parse `HH:MM:SS` with optional fractional seconds.
pub fn parse_hms(value: &str) -> Option<f64> {
    let mut parts = value.trim().split(':');
    let (h, m, s) = (parts.next()?, parts.next()?, parts.next()?);
    if parts.next().is_some() {
        return None;
    }
    let digits = |x: &str| !x.is_empty() && x.bytes().all(|b| b.is_ascii_digit());
    if !digits(h) || !digits(m) {
        return None;
    }
    let (sec_int, sec_frac) = s.split_once('.').unwrap_or((s, ""));
    if !digits(sec_int) || !(sec_frac.is_empty() || digits(sec_frac)) || s.ends_with('.') {
        return None;
    }
    let h: f64 = h.parse().ok()?;
    let m: f64 = m.parse().ok()?;
    let s: f64 = s.parse().ok()?;
    if m >= 60.0 || s >= 60.0 {
        return None;
    }
    Some(h * 3600.0 + m * 60.0 + s)
}

struct CsvColumns {
    start: usize,
    end: usize,
    speaker: usize,
}

impl CsvColumns {
    const POSITIONAL: CsvColumns = CsvColumns {
        start: 0,
        end: 1,
        speaker: 2,
    };

    fn from_header(header: &csv::StringRecord) -> Self {
        let find = |key: &str| {
            header
                .iter()
                .position(|h| h.trim().to_ascii_lowercase().contains(key))
        };
        match (find("start"), find("end"), find("speaker")) {
            (Some(start), Some(end), Some(speaker)) => Self { start, end, speaker },
            _ => Self::POSITIONAL,
        }
    }

    fn width(&self) -> usize {
        self.start.max(self.end).max(self.speaker) + 1
    }
}

/// Parse comma-separated `start,end,speaker` rows with `HH:MM:SS` times.
///
/// A first row whose first field does not begin with a digit is taken as a
/// header; named `start`/`end`/`speaker` columns are then located by name.
pub fn parse_annotation_csv(content: &str) -> Result<Vec<DiarizationSegment>, FormatError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(content.as_bytes());
    let mut columns = CsvColumns::POSITIONAL;
    let mut out = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| FormatError::Csv(e.to_string()))?;
        let line = record.position().map_or(i + 1, |p| p.line() as usize);
        if record.iter().all(str::is_empty) {
            continue;
        }
        if i == 0 && !record.get(0).unwrap_or("").starts_with(|c: char| c.is_ascii_digit()) {
            columns = CsvColumns::from_header(&record);
            continue;
        }
        if record.len() < columns.width() {
            return Err(FormatError::MissingFields {
                line,
                expected: columns.width(),
                found: record.len(),
            });
        }
        let time = |col: usize| {
            let value = &record[col];
            parse_hms(value).ok_or_else(|| FormatError::MalformedTime {
                line,
                column: col + 1,
                value: value.to_string(),
            })
        };
        let start = time(columns.start)?;
        let end = time(columns.end)?;
        if end <= start {
            return Err(FormatError::EndBeforeStart { line, start, end });
        }
        let speaker = record[columns.speaker].to_string();
        if speaker.is_empty() {
            return Err(FormatError::EmptySpeaker { line });
        }
        out.push(DiarizationSegment::new(start, end, speaker));
    }
    Ok(out)
}

/// Single-label overlap policy: the earlier-starting segment (ties by input
/// order) keeps an overlapped region, later segments are pushed to start where
/// it ends, and segments that become empty are dropped.
pub fn resolve_overlaps(segments: &[DiarizationSegment]) -> Vec<DiarizationSegment> {
    let mut order: Vec<&DiarizationSegment> = segments.iter().collect();
    order.sort_by(|a, b| a.start_s.total_cmp(&b.start_s));
    let mut out = Vec::with_capacity(order.len());
    let mut covered_until = f64::NEG_INFINITY;
    for seg in order {
        let start = seg.start_s.max(covered_until);
        if start < seg.end_s {
            out.push(DiarizationSegment::new(start, seg.end_s, seg.speaker.clone()));
            covered_until = seg.end_s;
        }
    }
    out
}

fn check_token(what: &'static str, value: &str) -> Result<(), FormatError> {
    if value.is_empty() || value.chars().any(char::is_whitespace) {
        return Err(FormatError::Whitespace {
            what,
            value: value.to_string(),
        });
    }
    Ok(())
}

/// One `SPEAKER` record per segment, ordered by onset, three-decimal times.
pub fn write_rttm(uri: &str, segments: &[DiarizationSegment]) -> Result<String, FormatError> {
    check_token("uri", uri)?;
    let mut sorted: Vec<&DiarizationSegment> = segments.iter().collect();
    sorted.sort_by(|a, b| a.start_s.total_cmp(&b.start_s));
    let mut out = String::new();
    for seg in sorted {
        check_token("speaker", &seg.speaker)?;
        writeln!(
            out,
            "SPEAKER {uri} 1 {:.3} {:.3} <NA> <NA> {} <NA> <NA>",
            seg.start_s,
            seg.duration(),
            seg.speaker
        )
        .expect("writing to a String");
    }
    Ok(out)
}

fn parse_field(line: usize, field: &'static str, value: &str) -> Result<f64, FormatError> {
    value
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| FormatError::MalformedField {
            line,
            field,
            value: value.to_string(),
        })
}

/// Parse the `SPEAKER` records of an RTTM file, grouped by URI. Other record types are skipped.
pub fn parse_rttm(content: &str) -> Result<BTreeMap<String, Vec<DiarizationSegment>>, FormatError> {
    let mut out: BTreeMap<String, Vec<DiarizationSegment>> = BTreeMap::new();
    for (i, raw) in content.lines().enumerate() {
        let line = i + 1;
        let fields: Vec<&str> = raw.split_whitespace().collect();
        if fields.first() != Some(&"SPEAKER") {
            continue;
        }
        if fields.len() < 8 {
            return Err(FormatError::MissingFields {
                line,
                expected: 8,
                found: fields.len(),
            });
        }
        let onset = parse_field(line, "onset", fields[3])?;
        let duration = parse_field(line, "duration", fields[4])?;
        if duration <= 0.0 {
            return Err(FormatError::NonPositiveDuration { line, duration });
        }
        if !(onset + duration).is_finite() {
            return Err(FormatError::MalformedField {
                line,
                field: "duration",
                value: fields[4].to_string(),
            });
        }
        out.entry(fields[1].to_string())
            .or_default()
            .push(DiarizationSegment::new(onset, onset + duration, fields[7]));
    }
    Ok(out)
}

pub fn write_uem(uri: &str, duration_s: f64) -> Result<String, FormatError> {
    check_token("uri", uri)?;
    if !(duration_s > 0.0) {
        return Err(FormatError::NonPositiveTotal(duration_s));
    }
    Ok(format!("{uri} 1 0.000 {duration_s:.3}\n"))
}

/// Parse `<uri> <channel> <onset> <offset>` lines.
pub fn parse_uem(content: &str) -> Result<Vec<UemLine>, FormatError> {
    let mut out = Vec::new();
    for (i, raw) in content.lines().enumerate() {
        let line = i + 1;
        let fields: Vec<&str> = raw.split_whitespace().collect();
        if fields.is_empty() || fields[0].starts_with(';') || fields[0].starts_with('#') {
            continue;
        }
        if fields.len() < 4 {
            return Err(FormatError::MissingFields {
                line,
                expected: 4,
                found: fields.len(),
            });
        }
        let onset_s = parse_field(line, "onset", fields[2])?;
        let offset_s = parse_field(line, "offset", fields[3])?;
        if offset_s <= onset_s {
            return Err(FormatError::EndBeforeStart {
                line,
                start: onset_s,
                end: offset_s,
            });
        }
        out.push(UemLine {
            uri: fields[0].to_string(),
            onset_s,
            offset_s,
        });
    }
    Ok(out)
}

pub fn write_lst(uris: &[impl AsRef<str>]) -> Result<String, FormatError> {
    if uris.is_empty() {
        return Err(FormatError::EmptyList);
    }
    let mut out = String::new();
    for uri in uris {
        check_token("uri", uri.as_ref())?;
        out.push_str(uri.as_ref());
        out.push('\n');
    }
    Ok(out)
}

/// Where the protocol files live, and what the database/protocol are called.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifestPaths {
    pub database: String,
    pub protocol: String,
    pub audio_root: String,
    pub rttm_root: String,
    pub uem_root: String,
    pub lst_root: String,
}

fn yaml_scalar(s: &str) -> String {
    let plain = !s.is_empty()
        && !s.starts_with(|c: char| "-?:,[]{}#&*!|>'\"%@`~ ".contains(c))
        && !s.contains(": ")
        && !s.contains(" #")
        && !s.ends_with([' ', ':']);
    if plain {
        s.to_string()
    } else {
        format!("'{}'", s.replace('\'', "''"))
    }
}

fn join_path(root: &str, leaf: &str) -> String {
    if root.is_empty() {
        leaf.to_string()
    } else {
        format!("{}/{leaf}", root.trim_end_matches('/'))
    }
}

/// A `database.yml` mapping each split to its LST, RTTM and UEM files.
pub fn emit_corpus_manifest(
    splits: &BTreeMap<String, Vec<String>>,
    paths: &ManifestPaths,
) -> Result<String, FormatError> {
    for name in REQUIRED_SPLITS {
        if !splits.contains_key(name) {
            return Err(FormatError::MissingSplit(name.to_string()));
        }
    }
    check_token("database", &paths.database)?;
    check_token("protocol", &paths.protocol)?;
    let mut out = String::new();
    let w = &mut out;
    let _ = writeln!(w, "Databases:");
    let _ = writeln!(
        w,
        "  {}: {}",
        paths.database,
        yaml_scalar(&join_path(&paths.audio_root, "{uri}.wav"))
    );
    let _ = writeln!(w);
    let _ = writeln!(w, "Protocols:");
    let _ = writeln!(w, "  {}:", paths.database);
    let _ = writeln!(w, "    SpeakerDiarization:");
    let _ = writeln!(w, "      {}:", paths.protocol);
    for name in REQUIRED_SPLITS {
        let count = splits[name].len();
        let _ = writeln!(w, "        {name}:");
        let _ = writeln!(w, "          # {count} file{}", if count == 1 { "" } else { "s" });
        let _ = writeln!(w, "          uri: {}", yaml_scalar(&join_path(&paths.lst_root, &format!("{name}.lst"))));
        let _ = writeln!(
            w,
            "          annotation: {}",
            yaml_scalar(&join_path(&paths.rttm_root, &format!("{name}.rttm")))
        );
        let _ = writeln!(
            w,
            "          annotated: {}",
            yaml_scalar(&join_path(&paths.uem_root, &format!("{name}.uem")))
        );
    }
    Ok(out)
}

/// Keep segments lasting at least `min_s` seconds (boundary inclusive).
pub fn filter_min_duration(segments: &[DiarizationSegment], min_s: f64) -> Vec<DiarizationSegment> {
    segments
        .iter()
        .filter(|s| s.duration() >= min_s - DURATION_EPS)
        .cloned()
        .collect()
}

fn round_ms(t: f64) -> f64 {
    (t * 1000.0).round() / 1000.0
}

/// JSON array of `{"start", "end", "speaker"}` objects, times rounded to milliseconds.
pub fn segments_to_json(segments: &[DiarizationSegment]) -> String {
    let rounded: Vec<DiarizationSegment> = segments
        .iter()
        .map(|s| DiarizationSegment::new(round_ms(s.start_s), round_ms(s.end_s), s.speaker.clone()))
        .collect();
    serde_json::to_string(&rounded).expect("segments serialize")
}

pub fn segments_from_json(content: &str) -> Result<Vec<DiarizationSegment>, FormatError> {
    let segments: Vec<DiarizationSegment> =
        serde_json::from_str(content).map_err(|e| FormatError::Json(e.to_string()))?;
    for (i, s) in segments.iter().enumerate() {
        if !(s.start_s.is_finite() && s.end_s.is_finite()) || s.end_s <= s.start_s {
            return Err(FormatError::EndBeforeStart {
                line: i + 1,
                start: s.start_s,
                end: s.end_s,
            });
        }
    }
    Ok(segments)
}
