//! Independent oracles, measurement helpers and fixtures for testing `speechprep`.

use std::collections::BTreeMap;
use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use speechprep::alignment::{AlignConfig, AlignedChunk};
use speechprep::diar_formats::DiarizationSegment;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum TestkitError {
    #[error("sequence of length {0} exceeds the enumeration limit")]
    TooLong(usize),
    #[error("invalid arguments: {0}")]
    Invalid(String),
}

pub const BRUTE_FORCE_LIMIT: usize = 10;

// ---------------------------------------------------------------- fixtures

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/v1").join(name)
}

pub fn fixture(name: &str) -> String {
    let path = fixture_path(name);
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// ------------------------------------------------------- synthetic corpus

const CONSONANTS: &[char] = &[
    'ক', 'খ', 'গ', 'ঘ', 'চ', 'ছ', 'জ', 'ঝ', 'ট', 'ঠ', 'ড', 'ঢ', 'ণ', 'ত', 'থ', 'দ', 'ধ', 'ন', 'প', 'ফ', 'ব', 'ভ',
    'ম', 'য', 'র', 'ল', 'শ', 'ষ', 'স', 'হ',
];
const VOWEL_SIGNS: &[Option<char>] = &[
    None,
    Some('া'),
    Some('ি'),
    Some('ী'),
    Some('ু'),
    Some('ূ'),
    Some('ে'),
    Some('ো'),
];

/// A random Bangla-script pseudo-word of two or three syllables.
pub fn random_word(rng: &mut impl Rng) -> String {
    let syllables = rng.random_range(2..=3);
    let mut w = String::new();
    for _ in 0..syllables {
        w.push(CONSONANTS[rng.random_range(0..CONSONANTS.len())]);
        if let Some(v) = VOWEL_SIGNS[rng.random_range(0..VOWEL_SIGNS.len())] {
            w.push(v);
        }
    }
    w
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCorpus {
    pub gt_words: Vec<String>,
    pub chunk_hyps: Vec<String>,
    /// Half-open word spans; they partition `0..gt_words.len()`.
    pub true_spans: Vec<(usize, usize)>,
    pub noise_rate: f64,
}

impl SyntheticCorpus {
    /// Fraction of hypothesis words differing from the ground truth.
    pub fn substituted_fraction(&self) -> f64 {
        let mut changed = 0;
        for (&(s, e), h) in self.true_spans.iter().zip(&self.chunk_hyps) {
            changed += h
                .split_whitespace()
                .zip(&self.gt_words[s..e])
                .filter(|(a, b)| a != b)
                .count();
        }
        changed as f64 / self.gt_words.len() as f64
    }
}

/// Random transcript cut into consecutive chunks of `chunk_len_words` (the
/// last may be shorter); each hypothesis word is replaced by a different
/// random word with probability `noise_rate`.
pub fn gen_synthetic_alignment_case(
    num_words: usize,
    chunk_len_words: usize,
    noise_rate: f64,
    seed: u64,
) -> Result<SyntheticCorpus, TestkitError> {
    if chunk_len_words == 0 || num_words < chunk_len_words {
        return Err(TestkitError::Invalid(format!(
            "need num_words >= chunk_len_words >= 1, got {num_words}, {chunk_len_words}"
        )));
    }
    if !(0.0..1.0).contains(&noise_rate) {
        return Err(TestkitError::Invalid(format!("noise_rate {noise_rate} outside [0, 1)")));
    }
    let mut rng = rng(seed);
    let gt_words: Vec<String> = (0..num_words).map(|_| random_word(&mut rng)).collect();
    let mut true_spans = Vec::new();
    let mut chunk_hyps = Vec::new();
    let mut start = 0;
    while start < num_words {
        let end = (start + chunk_len_words).min(num_words);
        let words: Vec<String> = gt_words[start..end]
            .iter()
            .map(|w| {
                if rng.random_bool(noise_rate) {
                    loop {
                        let r = random_word(&mut rng);
                        if &r != w {
                            break r;
                        }
                    }
                } else {
                    w.clone()
                }
            })
            .collect();
        chunk_hyps.push(words.join(" "));
        true_spans.push((start, end));
        start = end;
    }
    Ok(SyntheticCorpus {
        gt_words,
        chunk_hyps,
        true_spans,
        noise_rate,
    })
}

// ------------------------------------------------------ edit distance

/// Exhaustive search over monotone alignments for the fewest edits, ties
/// broken by fewest deletions. Returns (S, D, I).
pub fn brute_force_edit<T: PartialEq>(reference: &[T], hypothesis: &[T]) -> Result<(usize, usize, usize), TestkitError> {
    for len in [reference.len(), hypothesis.len()] {
        if len > BRUTE_FORCE_LIMIT {
            return Err(TestkitError::TooLong(len));
        }
    }
    let mut best = (usize::MAX, usize::MAX, 0, 0, 0);
    let mut path = (0usize, 0usize, 0usize);
    walk(reference, hypothesis, 0, 0, &mut path, &mut best);
    Ok((best.2, best.3, best.4))
}

fn walk<T: PartialEq>(
    r: &[T],
    h: &[T],
    i: usize,
    j: usize,
    cur: &mut (usize, usize, usize),
    best: &mut (usize, usize, usize, usize, usize),
) {
    let total = cur.0 + cur.1 + cur.2;
    // every remaining length difference costs at least one edit
    if total + (r.len() - i).abs_diff(h.len() - j) > best.0 {
        return;
    }
    if i == r.len() && j == h.len() {
        if (total, cur.1) < (best.0, best.1) {
            *best = (total, cur.1, cur.0, cur.1, cur.2);
        }
        return;
    }
    if i < r.len() && j < h.len() {
        let sub = r[i] != h[j];
        cur.0 += sub as usize;
        walk(r, h, i + 1, j + 1, cur, best);
        cur.0 -= sub as usize;
    }
    if i < r.len() {
        cur.1 += 1;
        walk(r, h, i + 1, j, cur, best);
        cur.1 -= 1;
    }
    if j < h.len() {
        cur.2 += 1;
        walk(r, h, i, j + 1, cur, best);
        cur.2 -= 1;
    }
}

// ------------------------------------------------------------ alignment

/// Textbook O(|a|·|b|) LCS length.
pub fn lcs_dp(a: &[char], b: &[char]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for &ca in a {
        for (j, &cb) in b.iter().enumerate() {
            cur[j + 1] = if ca == cb {
                prev[j] + 1
            } else {
                cur[j].max(prev[j + 1])
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

fn ratio(a: &str, b: &str) -> f64 {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.is_empty() && b.is_empty() {
        return 100.0;
    }
    200.0 * lcs_dp(&a, &b) as f64 / (a.len() + b.len()) as f64
}

/// Alignment by scanning every (start, length) pair of the transcript and
/// keeping those inside the search box around the pointer.
pub fn exhaustive_align(gt_words: &[String], hyps: &[String], cfg: &AlignConfig) -> Vec<AlignedChunk> {
    let n = gt_words.len();
    let mut pointer = 0usize;
    let mut prev_end = 0usize;
    let mut out = Vec::new();
    for (chunk_index, hyp) in hyps.iter().enumerate() {
        let hyp_words: Vec<&str> = hyp.split_whitespace().collect();
        let big_l = hyp_words.len();
        if pointer >= n || big_l == 0 {
            let at = prev_end.max(pointer.min(n));
            out.push(AlignedChunk {
                chunk_index,
                gt_start_word: at,
                gt_end_word: at,
                score: 0.0,
                low_confidence: true,
            });
            continue;
        }
        let hyp_text = hyp_words.join(" ");
        let l_lo = big_l.saturating_sub(cfg.span_delta_words).max(1);
        let l_hi = big_l + cfg.span_delta_words;
        let mut best: Option<((f64, usize, usize, usize, usize), usize, usize, f64)> = None;
        for s in 0..n {
            for l in 1..=n - s {
                let in_window = s.abs_diff(pointer) <= cfg.window_words;
                let in_lengths = (l_lo..=l_hi).contains(&l) || (l == n - s && n - s < l_lo);
                if !(in_window && in_lengths) {
                    continue;
                }
                let score = ratio(&gt_words[s..s + l].join(" "), &hyp_text);
                let key = (-score, s.abs_diff(pointer), l.abs_diff(big_l), s, l);
                let replace = match &best {
                    None => true,
                    Some((k, ..)) => {
                        (key.0, key.1, key.2, key.3, key.4)
                            .partial_cmp(k)
                            .is_some_and(|o| o.is_lt())
                    }
                };
                if replace {
                    best = Some((key, s, l, score));
                }
            }
        }
        let (_, s, l, score) = best.expect("window contains a start position");
        let start = s.max(prev_end);
        let end = (s + l).max(start);
        pointer = s + l;
        prev_end = end;
        out.push(AlignedChunk {
            chunk_index,
            gt_start_word: start,
            gt_end_word: end,
            score,
            low_confidence: start == end || score < cfg.low_confidence_threshold,
        });
    }
    out
}

// ----------------------------------------------------------- assignment

/// Best total weight over every partial one-to-one row→column matching.
pub fn brute_force_assignment(weights: &[Vec<f64>]) -> f64 {
    let cols = weights.iter().map(Vec::len).max().unwrap_or(0);
    fn go(weights: &[Vec<f64>], row: usize, used: &mut Vec<bool>) -> f64 {
        if row == weights.len() {
            return 0.0;
        }
        let mut best = go(weights, row + 1, used);
        for j in 0..used.len() {
            if !used[j] {
                used[j] = true;
                let w = weights[row].get(j).copied().unwrap_or(0.0);
                best = best.max(w + go(weights, row + 1, used));
                used[j] = false;
            }
        }
        best
    }
    go(weights, 0, &mut vec![false; cols])
}

// ------------------------------------------------------------------ DER

/// DER on a frame grid: a frame belongs to a segment when its midpoint does.
/// The speaker mapping maximizes frame overlap by exhaustive search.
pub fn frame_der(reference: &[DiarizationSegment], hypothesis: &[DiarizationSegment], frame_s: f64) -> f64 {
    let horizon = reference
        .iter()
        .chain(hypothesis)
        .map(|s| s.end_s)
        .fold(0.0, f64::max);
    let frames = (horizon / frame_s).ceil() as usize + 1;
    let (ref_masks, ref_n) = frame_masks(reference, frames, frame_s);
    let (hyp_masks, hyp_n) = frame_masks(hypothesis, frames, frame_s);

    let mut overlap = vec![vec![0.0; ref_n]; hyp_n];
    let (mut miss, mut fa, mut pairs, mut total) = (0u64, 0u64, 0u64, 0u64);
    for (&r, &h) in ref_masks.iter().zip(&hyp_masks) {
        let (nr, nh) = (r.count_ones() as u64, h.count_ones() as u64);
        total += nr;
        miss += nr.saturating_sub(nh);
        fa += nh.saturating_sub(nr);
        pairs += nr.min(nh);
        for (hi, row) in overlap.iter_mut().enumerate() {
            if h >> hi & 1 == 1 {
                for (ri, cell) in row.iter_mut().enumerate() {
                    if r >> ri & 1 == 1 {
                        *cell += 1.0;
                    }
                }
            }
        }
    }
    if total == 0 {
        return if fa == 0 { 0.0 } else { f64::INFINITY };
    }
    let correct = brute_force_assignment(&overlap);
    let conf = pairs as f64 - correct;
    (miss as f64 + fa as f64 + conf) / total as f64
}

fn frame_masks(segments: &[DiarizationSegment], frames: usize, frame_s: f64) -> (Vec<u64>, usize) {
    let mut ids: BTreeMap<&str, usize> = BTreeMap::new();
    for s in segments {
        let n = ids.len();
        ids.entry(&s.speaker).or_insert(n);
    }
    assert!(ids.len() <= 64, "frame oracle supports at most 64 speakers");
    let mut masks = vec![0u64; frames];
    for s in segments {
        let bit = 1u64 << ids[s.speaker.as_str()];
        // frames whose midpoint (k + 0.5)·frame_s lies in [start, end)
        let first = (s.start_s / frame_s - 0.5).ceil().max(0.0) as usize;
        let last = ((s.end_s / frame_s - 0.5).ceil().max(0.0) as usize).min(frames);
        for m in &mut masks[first.min(frames)..last] {
            *m |= bit;
        }
    }
    (masks, ids.len())
}

/// Random diarization: per speaker, alternating silence and speech of random lengths.
pub fn random_diarization(
    rng: &mut impl Rng,
    speakers: &[&str],
    horizon_s: f64,
    max_segments_per_speaker: usize,
) -> Vec<DiarizationSegment> {
    let mut out = Vec::new();
    for spk in speakers {
        let count = rng.random_range(0..=max_segments_per_speaker);
        let mut t = 0.0;
        for _ in 0..count {
            // millisecond grid keeps segments exactly representable in RTTM
            let gap = (rng.random_range(0.0..horizon_s / 4.0) * 1000.0).round() / 1000.0;
            let len = (rng.random_range(0.05..horizon_s / 4.0) * 1000.0).round() / 1000.0;
            let start = t + gap;
            let end = start + len;
            if end > horizon_s {
                break;
            }
            out.push(DiarizationSegment::new(start, end, *spk));
            t = end;
        }
    }
    out
}

/// Number of distinct segment boundaries in both annotations.
pub fn boundary_count(reference: &[DiarizationSegment], hypothesis: &[DiarizationSegment]) -> usize {
    let mut b: Vec<u64> = reference
        .iter()
        .chain(hypothesis)
        .flat_map(|s| [s.start_s.to_bits(), s.end_s.to_bits()])
        .collect();
    b.sort_unstable();
    b.dedup();
    b.len()
}

// ------------------------------------------------------ signal helpers

pub fn sine(freq: f64, amplitude: f64, fs: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| amplitude * (2.0 * std::f64::consts::PI * freq * i as f64 / fs).sin())
        .collect()
}

fn hann(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / n as f64).cos())
        .collect()
}

/// Amplitude of a sinusoid at `freq` by Hann-weighted projection.
pub fn tone_amplitude(signal: &[f64], freq: f64, fs: f64) -> f64 {
    let w = hann(signal.len());
    let (mut re, mut im) = (0.0, 0.0);
    for (i, (&x, &wi)) in signal.iter().zip(&w).enumerate() {
        let ph = 2.0 * std::f64::consts::PI * freq * i as f64 / fs;
        re += wi * x * ph.cos();
        im -= wi * x * ph.sin();
    }
    2.0 * (re * re + im * im).sqrt() / w.iter().sum::<f64>()
}

fn magnitude_spectrum(signal: &[f64], window: &[f64]) -> Vec<f64> {
    let n = window.len();
    let mut buf: Vec<Complex<f64>> = signal.iter().zip(window).map(|(&x, &w)| Complex::new(x * w, 0.0)).collect();
    buf.resize(n, Complex::new(0.0, 0.0));
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    buf[..n / 2 + 1].iter().map(|c| c.norm()).collect()
}

/// Frequency of the strongest spectral peak, refined by parabolic
/// interpolation of the log magnitude.
pub fn peak_frequency(signal: &[f64], fs: f64) -> f64 {
    let n = signal.len();
    let mag = magnitude_spectrum(signal, &hann(n));
    let k = (1..mag.len() - 1)
        .max_by(|&a, &b| mag[a].total_cmp(&mag[b]))
        .expect("signal has at least four samples");
    let (a, b, c) = (mag[k - 1].ln(), mag[k].ln(), mag[k + 1].ln());
    let offset = 0.5 * (a - c) / (a - 2.0 * b + c);
    (k as f64 + offset) * fs / n as f64
}

/// Welch power spectral density (Hann segments of `seg_len`, half overlap).
pub fn welch_psd(signal: &[f64], seg_len: usize) -> Vec<f64> {
    let w = hann(seg_len);
    let mut acc = vec![0.0; seg_len / 2 + 1];
    let mut count = 0;
    let mut start = 0;
    while start + seg_len <= signal.len() {
        for (a, m) in acc.iter_mut().zip(magnitude_spectrum(&signal[start..start + seg_len], &w)) {
            *a += m * m;
        }
        count += 1;
        start += seg_len / 2;
    }
    acc.iter().map(|a| a / count.max(1) as f64).collect()
}

/// Spectral slope in dB per octave between `lo` and `hi` Hz: least-squares
/// fit of half-octave band power (dB) against log2 of the band center.
pub fn octave_slope_db(signal: &[f64], fs: f64, lo: f64, hi: f64) -> f64 {
    let seg = 4096;
    let psd = welch_psd(signal, seg);
    let bin_hz = fs / seg as f64;
    let mut points = Vec::new();
    let mut f0 = lo;
    while f0 * 2f64.sqrt() <= hi * 1.000_001 {
        let f1 = f0 * 2f64.sqrt();
        let bins: Vec<f64> = (0..psd.len())
            .filter(|&k| {
                let f = k as f64 * bin_hz;
                f >= f0 && f < f1
            })
            .map(|k| psd[k])
            .collect();
        let mean = bins.iter().sum::<f64>() / bins.len() as f64;
        points.push(((f0 * f1).sqrt().log2(), 10.0 * mean.log10()));
        f0 = f1;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Schroeder backward-integrated energy decay curve in dB (0 dB at t = 0).
pub fn schroeder_edc_db(h: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    let mut energy: Vec<f64> = h
        .iter()
        .rev()
        .map(|x| {
            acc += x * x;
            acc
        })
        .collect();
    energy.reverse();
    let e0 = energy.first().copied().unwrap_or(1.0);
    energy.iter().map(|e| 10.0 * (e / e0).log10()).collect()
}

/// Reverberation time from the decay curve: line fit between -5 and -35 dB,
/// extrapolated to -60 dB.
pub fn rt60_from_edc(edc_db: &[f64], fs: f64) -> f64 {
    let pts: Vec<(f64, f64)> = edc_db
        .iter()
        .enumerate()
        .filter(|(_, &d)| (-35.0..=-5.0).contains(&d))
        .map(|(i, &d)| (i as f64 / fs, d))
        .collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    -60.0 / (sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn brute_force_examples() {
        assert_eq!(brute_force_edit(&["a", "b"], &["a", "b"]), Ok((0, 0, 0)));
        assert_eq!(brute_force_edit(&["a", "b", "c"], &["a", "x", "c", "d"]), Ok((1, 0, 1)));
        assert_eq!(brute_force_edit(&["a"], &[] as &[&str]), Ok((0, 1, 0)));
        assert_eq!(brute_force_edit(&[0; 11], &[0]), Err(TestkitError::TooLong(11)));
    }

    #[test]
    fn corpus_properties() {
        let c = gen_synthetic_alignment_case(300, 10, 0.0, 1).unwrap();
        assert_eq!(c.true_spans.len(), 30);
        for (&(s, e), h) in c.true_spans.iter().zip(&c.chunk_hyps) {
            assert_eq!(*h, c.gt_words[s..e].join(" "));
        }
        let noisy = gen_synthetic_alignment_case(300, 10, 0.1, 7).unwrap();
        assert!((noisy.substituted_fraction() - 0.10).abs() <= 0.04);
        assert_eq!(noisy, gen_synthetic_alignment_case(300, 10, 0.1, 7).unwrap());
        let odd = gen_synthetic_alignment_case(25, 10, 0.0, 2).unwrap();
        assert_eq!(odd.true_spans, vec![(0, 10), (10, 20), (20, 25)]);
        assert!(gen_synthetic_alignment_case(5, 10, 0.0, 0).is_err());
        assert!(gen_synthetic_alignment_case(10, 10, 1.0, 0).is_err());
    }

    #[test]
    fn frame_der_examples() {
        let seg = DiarizationSegment::new;
        let r = vec![seg(0.0, 10.0, "A"), seg(20.0, 110.0, "B")];
        assert_eq!(frame_der(&r, &r, 0.001), 0.0);
        let h = vec![seg(1.0, 11.0, "A"), seg(20.0, 110.0, "B")];
        assert!((frame_der(&r, &h, 0.001) - 0.02).abs() < 2e-4);
        assert_eq!(frame_der(&r, &[], 0.001), 1.0);
    }

    #[test]
    fn assignment_oracle() {
        assert_eq!(brute_force_assignment(&[vec![1.0, 5.0], vec![4.0, 6.0]]), 9.0);
        assert_eq!(brute_force_assignment(&[vec![1.0], vec![7.0]]), 7.0);
        assert_eq!(brute_force_assignment(&[]), 0.0);
    }

    #[test]
    fn signal_helpers() {
        let x = sine(440.0, 0.5, 16_000.0, 16_000);
        assert!((peak_frequency(&x, 16_000.0) - 440.0).abs() < 0.5);
        assert!((tone_amplitude(&x, 440.0, 16_000.0) - 0.5).abs() < 1e-3);
        // exponential decay of 60 dB over 0.5 s
        let h: Vec<f64> = (0..8000).map(|i| (-6.9078 * i as f64 / 8000.0).exp()).collect();
        let rt = rt60_from_edc(&schroeder_edc_db(&h), 16_000.0);
        assert!((rt - 0.5).abs() < 0.03, "{rt}");
    }

    #[test]
    fn lcs_dp_matches_known() {
        let a: Vec<char> = "abcbdab".chars().collect();
        let b: Vec<char> = "bdcaba".chars().collect();
        assert_eq!(lcs_dp(&a, &b), 4);
    }

    #[test]
    fn fixtures_exist() {
        assert!(fixture("file1.rttm").starts_with("SPEAKER file1"));
    }
}
