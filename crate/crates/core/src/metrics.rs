//! WER, DER and RTF.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use crate::assignment::max_weight_assignment;
use crate::diar_formats::DiarizationSegment;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum MetricError {
    #[error("reference has no words: N=0 undefined")]
    EmptyReference,
    #[error("no reference speech in the scoring region")]
    NoReferenceSpeech,
    #[error("{0} must be positive")]
    NonPositive(&'static str),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct WerReport {
    #[serde(rename = "S")]
    pub substitutions: usize,
    #[serde(rename = "D")]
    pub deletions: usize,
    #[serde(rename = "I")]
    pub insertions: usize,
    #[serde(rename = "N")]
    pub ref_words: usize,
    pub wer: f64,
}

impl WerReport {
    pub fn from_counts(s: usize, d: usize, i: usize, n: usize) -> Self {
        Self {
            substitutions: s,
            deletions: d,
            insertions: i,
            ref_words: n,
            wer: if n == 0 { 0.0 } else { (s + d + i) as f64 / n as f64 },
        }
    }

    pub fn errors(&self) -> usize {
        self.substitutions + self.deletions + self.insertions
    }

    /// Corpus-level WER: error counts are summed before dividing.
    pub fn micro_average(reports: &[WerReport]) -> WerReport {
        let sum = |f: fn(&WerReport) -> usize| reports.iter().map(f).sum::<usize>();
        Self::from_counts(
            sum(|r| r.substitutions),
            sum(|r| r.deletions),
            sum(|r| r.insertions),
            sum(|r| r.ref_words),
        )
    }

    pub fn macro_average(reports: &[WerReport]) -> f64 {
        if reports.is_empty() {
            return 0.0;
        }
        reports.iter().map(|r| r.wer).sum::<f64>() / reports.len() as f64
    }
}

pub fn tokenize_words(text: &str) -> Vec<String> {
    let nfc: String = text.nfc().collect();
    nfc.split_whitespace().map(str::to_string).collect()
}

/// Minimal (substitutions, deletions, insertions) between two word sequences.
///
/// Among alignments of minimal total cost, the one with the fewest deletions
/// (equivalently the most substitutions) is chosen.
pub fn edit_counts<T: PartialEq>(reference: &[T], hypothesis: &[T]) -> (usize, usize, usize) {
    let (n, m) = (reference.len(), hypothesis.len());
    // Each cell holds (total edits, deletions); S and I follow from the cell indices.
    let mut prev: Vec<(usize, usize)> = (0..=m).map(|j| (j, 0)).collect();
    let mut cur = vec![(0, 0); m + 1];
    for i in 1..=n {
        cur[0] = (i, i);
        for j in 1..=m {
            let diag = prev[j - 1];
            let diag = if reference[i - 1] == hypothesis[j - 1] {
                diag
            } else {
                (diag.0 + 1, diag.1)
            };
            let del = (prev[j].0 + 1, prev[j].1 + 1);
            let ins = (cur[j - 1].0 + 1, cur[j - 1].1);
            cur[j] = diag.min(del).min(ins);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    let (total, deletions) = prev[m];
    // matched + S + D = n and matched + S + I = m
    let insertions = deletions + m - n;
    let substitutions = total - deletions - insertions;
    (substitutions, deletions, insertions)
}

/// Word error rate after NFC normalization and whitespace tokenization.
pub fn wer(reference: &str, hypothesis: &str) -> Result<WerReport, MetricError> {
    let r = tokenize_words(reference);
    if r.is_empty() {
        return Err(MetricError::EmptyReference);
    }
    let h = tokenize_words(hypothesis);
    let (s, d, i) = edit_counts(&r, &h);
    Ok(WerReport::from_counts(s, d, i, r.len()))
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DerReport {
    #[serde(rename = "FA")]
    pub false_alarm: f64,
    #[serde(rename = "MISS")]
    pub missed: f64,
    #[serde(rename = "CONF")]
    pub confusion: f64,
    #[serde(rename = "TOTAL")]
    pub total: f64,
    pub der: f64,
    /// Hypothesis speaker to reference speaker.
    pub mapping: BTreeMap<String, String>,
}

impl DerReport {
    pub fn errors(&self) -> f64 {
        self.false_alarm + self.missed + self.confusion
    }

    pub fn micro_average(reports: &[DerReport]) -> Result<DerReport, MetricError> {
        let mut agg = DerReport::default();
        for r in reports {
            agg.false_alarm += r.false_alarm;
            agg.missed += r.missed;
            agg.confusion += r.confusion;
            agg.total += r.total;
        }
        if agg.total <= 0.0 {
            return Err(MetricError::NoReferenceSpeech);
        }
        agg.der = agg.errors() / agg.total;
        Ok(agg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoringRegion {
    pub start_s: f64,
    pub end_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Track {
    Ref(usize),
    Hyp(usize),
    Uem,
    Collar,
}

/// Stretch of time over which the active speaker sets do not change.
struct Region {
    duration: f64,
    refs: Vec<usize>,
    hyps: Vec<usize>,
}

fn speaker_index(segments: &[DiarizationSegment]) -> BTreeMap<&str, usize> {
    let mut labels: Vec<&str> = segments.iter().map(|s| s.speaker.as_str()).collect();
    labels.sort_unstable();
    labels.dedup();
    labels.into_iter().enumerate().map(|(i, l)| (l, i)).collect()
}

/// Diarization error rate with exact interval arithmetic.
///
/// `collar_s` removes `±collar_s` around every reference boundary from
/// scoring. With `uem`, only time inside the listed regions is scored.
pub fn der(
    reference: &[DiarizationSegment],
    hypothesis: &[DiarizationSegment],
    collar_s: f64,
    uem: Option<&[ScoringRegion]>,
) -> Result<DerReport, MetricError> {
    let ref_ids = speaker_index(reference);
    let hyp_ids = speaker_index(hypothesis);

    let mut events: Vec<(f64, Track, i32)> = Vec::new();
    for s in reference {
        let t = Track::Ref(ref_ids[s.speaker.as_str()]);
        events.push((s.start_s, t, 1));
        events.push((s.end_s, t, -1));
        if collar_s > 0.0 {
            for b in [s.start_s, s.end_s] {
                events.push((b - collar_s, Track::Collar, 1));
                events.push((b + collar_s, Track::Collar, -1));
            }
        }
    }
    for s in hypothesis {
        let t = Track::Hyp(hyp_ids[s.speaker.as_str()]);
        events.push((s.start_s, t, 1));
        events.push((s.end_s, t, -1));
    }
    if let Some(regions) = uem {
        for r in regions {
            events.push((r.start_s, Track::Uem, 1));
            events.push((r.end_s, Track::Uem, -1));
        }
    }
    events.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut ref_active = vec![0i32; ref_ids.len()];
    let mut hyp_active = vec![0i32; hyp_ids.len()];
    let mut in_uem = 0i32;
    let mut in_collar = 0i32;
    let mut regions = Vec::new();
    let mut k = 0;
    while k < events.len() {
        let t = events[k].0;
        while k < events.len() && events[k].0 == t {
            let (_, track, delta) = events[k];
            match track {
                Track::Ref(i) => ref_active[i] += delta,
                Track::Hyp(i) => hyp_active[i] += delta,
                Track::Uem => in_uem += delta,
                Track::Collar => in_collar += delta,
            }
            k += 1;
        }
        let Some(&(next, _, _)) = events.get(k) else { break };
        let scored = (uem.is_none() || in_uem > 0) && in_collar == 0;
        if next > t && scored {
            let active = |v: &[i32]| v.iter().enumerate().filter(|(_, &c)| c > 0).map(|(i, _)| i).collect::<Vec<_>>();
            let refs = active(&ref_active);
            let hyps = active(&hyp_active);
            if !refs.is_empty() || !hyps.is_empty() {
                regions.push(Region {
                    duration: next - t,
                    refs,
                    hyps,
                });
            }
        }
    }

    let mut overlap = vec![vec![0.0; ref_ids.len()]; hyp_ids.len()];
    for r in &regions {
        for &h in &r.hyps {
            for &s in &r.refs {
                overlap[h][s] += r.duration;
            }
        }
    }
    let assignment = max_weight_assignment(&overlap);

    let mut report = DerReport::default();
    for r in &regions {
        let (nr, nh) = (r.refs.len(), r.hyps.len());
        let correct = r
            .hyps
            .iter()
            .filter(|&&h| assignment[h].is_some_and(|s| r.refs.contains(&s)))
            .count();
        report.total += r.duration * nr as f64;
        report.missed += r.duration * nr.saturating_sub(nh) as f64;
        report.false_alarm += r.duration * nh.saturating_sub(nr) as f64;
        report.confusion += r.duration * (nr.min(nh) - correct) as f64;
    }
    if report.total <= 0.0 {
        return Err(MetricError::NoReferenceSpeech);
    }
    report.der = report.errors() / report.total;

    let ref_labels: Vec<&str> = ref_ids.keys().copied().collect();
    for (label, &h) in &hyp_ids {
        if let Some(s) = assignment[h] {
            if overlap[h][s] > 0.0 {
                report.mapping.insert(label.to_string(), ref_labels[s].to_string());
            }
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RtfReport {
    #[serde(rename = "T")]
    pub inference_time_s: f64,
    #[serde(rename = "D")]
    pub audio_duration_s: f64,
    pub rtf: f64,
}

/// Real-time factor: processing time over audio duration.
pub fn rtf(inference_time_s: f64, audio_duration_s: f64) -> Result<RtfReport, MetricError> {
    if !(inference_time_s > 0.0) {
        return Err(MetricError::NonPositive("inference time"));
    }
    if !(audio_duration_s > 0.0) {
        return Err(MetricError::NonPositive("audio duration"));
    }
    Ok(RtfReport {
        inference_time_s,
        audio_duration_s,
        rtf: inference_time_s / audio_duration_s,
    })
}
