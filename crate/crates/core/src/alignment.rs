//! Sequential fuzzy alignment of chunk hypotheses against a full transcript.
//!
//! A reading pointer walks the ground-truth word list. Each hypothesis is
//! matched against spans starting near the pointer whose length is close to
//! the hypothesis word count; the best-scoring span wins and the pointer
//! moves to its end.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlignConfig {
    /// Start positions searched on each side of the pointer.
    pub window_words: usize,
    /// Allowed deviation of the span length from the hypothesis word count.
    pub span_delta_words: usize,
    /// Scores below this (0-100) are flagged as low confidence.
    pub low_confidence_threshold: f64,
}

impl Default for AlignConfig {
    fn default() -> Self {
        Self {
            window_words: 5,
            span_delta_words: 3,
            low_confidence_threshold: 50.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignedChunk {
    pub chunk_index: usize,
    pub gt_start_word: usize,
    /// Exclusive. Equal to `gt_start_word` for the empty-span sentinel.
    pub gt_end_word: usize,
    pub score: f64,
    pub low_confidence: bool,
}

impl AlignedChunk {
    pub fn is_empty(&self) -> bool {
        self.gt_end_word <= self.gt_start_word
    }

    pub fn text(&self, gt_words: &[impl AsRef<str>]) -> String {
        join_words(&gt_words[self.gt_start_word..self.gt_end_word])
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum AlignError {
    #[error("ground-truth transcript has no words")]
    EmptyTranscript,
}

fn join_words(words: &[impl AsRef<str>]) -> String {
    words.iter().map(AsRef::as_ref).collect::<Vec<_>>().join(" ")
}

/// Precomputed match masks for bit-parallel LCS against a fixed pattern.
pub struct LcsPattern {
    len: usize,
    words: usize,
    masks: HashMap<char, Vec<u64>>,
}

impl LcsPattern {
    pub fn new(pattern: &str) -> Self {
        let chars: Vec<char> = pattern.chars().collect();
        let words = chars.len().div_ceil(64).max(1);
        let mut masks: HashMap<char, Vec<u64>> = HashMap::new();
        for (i, c) in chars.iter().enumerate() {
            masks.entry(*c).or_insert_with(|| vec![0; words])[i / 64] |= 1 << (i % 64);
        }
        Self {
            len: chars.len(),
            words,
            masks,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Length of the longest common subsequence with `text`.
    pub fn lcs<I: IntoIterator<Item = char>>(&self, text: I) -> usize {
        if self.len == 0 {
            return 0;
        }
        let mut state = vec![u64::MAX; self.words];
        for c in text {
            let Some(m) = self.masks.get(&c) else { continue };
            let mut carry = 0u64;
            for (s, &mw) in state.iter_mut().zip(m) {
                let u = *s & mw;
                let (sum, c1) = s.overflowing_add(u);
                let (sum, c2) = sum.overflowing_add(carry);
                carry = (c1 | c2) as u64;
                *s = sum | (*s - u);
            }
        }
        let mut ones = 0usize;
        for (w, s) in state.iter().enumerate() {
            let bits = (self.len - w * 64).min(64);
            let mask = if bits == 64 { u64::MAX } else { (1u64 << bits) - 1 };
            ones += (s & mask).count_ones() as usize;
        }
        self.len - ones
    }
}

/// Similarity score from an LCS length and the two string lengths.
pub fn ratio_from_lcs(lcs: usize, len_a: usize, len_b: usize) -> f64 {
    if len_a + len_b == 0 {
        return 100.0;
    }
    200.0 * lcs as f64 / (len_a + len_b) as f64
}

/// Normalized indel similarity over Unicode scalar values, in `[0, 100]`.
pub fn indel_ratio(a: &str, b: &str) -> f64 {
    let pattern = LcsPattern::new(a);
    let lcs = pattern.lcs(b.chars());
    ratio_from_lcs(lcs, pattern.len(), b.chars().count())
}

/// Candidate ordering: higher score, then start closer to the pointer, then
/// length closer to the hypothesis word count, then smaller start, then shorter span.
pub(crate) fn better(
    cand: (f64, usize, usize),
    best: (f64, usize, usize),
    pointer: usize,
    hyp_words: usize,
) -> bool {
    let key = |(score, s, l): (f64, usize, usize)| {
        (-score, s.abs_diff(pointer), l.abs_diff(hyp_words), s, l)
    };
    key(cand)
        .partial_cmp(&key(best))
        .is_some_and(|o| o == std::cmp::Ordering::Less)
}

/// Align each hypothesis (in chunk order) to a span of `gt_words`.
pub fn align_chunks(
    gt_words: &[impl AsRef<str>],
    hyps: &[impl AsRef<str>],
    cfg: &AlignConfig,
) -> Result<Vec<AlignedChunk>, AlignError> {
    if gt_words.is_empty() {
        return Err(AlignError::EmptyTranscript);
    }
    let n = gt_words.len();
    let word_chars: Vec<Vec<char>> = gt_words.iter().map(|w| w.as_ref().chars().collect()).collect();

    let mut pointer = 0usize;
    let mut prev_end = 0usize;
    let mut out = Vec::with_capacity(hyps.len());
    for (chunk_index, hyp) in hyps.iter().enumerate() {
        let hyp = hyp.as_ref();
        let hyp_words = hyp.split_whitespace().count();
        if pointer >= n || hyp_words == 0 {
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

        let hyp_norm = hyp.split_whitespace().collect::<Vec<_>>().join(" ");
        let pattern = LcsPattern::new(&hyp_norm);
        let s_lo = pointer.saturating_sub(cfg.window_words);
        let s_hi = (pointer + cfg.window_words).min(n - 1);
        let l_lo = hyp_words.saturating_sub(cfg.span_delta_words).max(1);
        let l_hi = hyp_words + cfg.span_delta_words;

        let mut best: Option<(f64, usize, usize)> = None;
        for s in s_lo..=s_hi {
            let max_len = n - s;
            let mut last_len = 0;
            for l in l_lo..=l_hi {
                let l = l.min(max_len);
                if l == last_len {
                    continue;
                }
                last_len = l;
                let span = &word_chars[s..s + l];
                let span_len = span.iter().map(Vec::len).sum::<usize>() + l - 1;
                let text = span
                    .iter()
                    .enumerate()
                    .flat_map(|(i, w)| (i > 0).then_some(' ').into_iter().chain(w.iter().copied()));
                let score = ratio_from_lcs(pattern.lcs(text), span_len, pattern.len());
                let cand = (score, s, l);
                if best.is_none_or(|b| better(cand, b, pointer, hyp_words)) {
                    best = Some(cand);
                }
            }
        }
        let (score, s, l) = best.expect("search box is never empty");
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
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn words(s: &str) -> Vec<&str> {
        s.split_whitespace().collect()
    }

    #[test]
    fn ratio_examples() {
        assert_eq!(indel_ratio("abc", "abc"), 100.0);
        assert_eq!(indel_ratio("ab", "cd"), 0.0);
        assert_eq!(indel_ratio("abcd", "abce"), 75.0);
        assert_eq!(indel_ratio("", ""), 100.0);
        assert_eq!(indel_ratio("", "a"), 0.0);
    }

    #[test]
    fn lcs_spans_multiple_machine_words() {
        let a: String = (0..150).map(|i| char::from(b'a' + (i % 7) as u8)).collect();
        let mut b = a.clone();
        b.insert(70, 'z');
        b.remove(3);
        let p = LcsPattern::new(&a);
        assert_eq!(p.lcs(b.chars()), 149);
        assert_eq!(p.lcs(a.chars()), 150);
    }

    #[test]
    fn exact_thirds_align_perfectly() {
        let gt = words("w1 w2 w3 w4 w5 w6 w7 w8 w9");
        let hyps = ["w1 w2 w3", "w4 w5 w6", "w7 w8 w9"];
        let out = align_chunks(&gt, &hyps, &AlignConfig::default()).unwrap();
        let spans: Vec<_> = out.iter().map(|c| (c.gt_start_word, c.gt_end_word)).collect();
        assert_eq!(spans, vec![(0, 3), (3, 6), (6, 9)]);
        assert!(out.iter().all(|c| c.score == 100.0 && !c.low_confidence));
    }

    #[test]
    fn substituted_word_keeps_span() {
        let gt = words("w1 w2 w3 w4 w5 w6 w7 w8 w9");
        let hyps = ["w1 w2 w3", "w4 QQ w6", "w7 w8 w9"];
        let out = align_chunks(&gt, &hyps, &AlignConfig::default()).unwrap();
        assert_eq!((out[1].gt_start_word, out[1].gt_end_word), (3, 6));
        assert!(out[1].score < 100.0);
    }

    #[test]
    fn long_hypothesis_clamps_at_transcript_end() {
        let gt = words("a b c d e");
        let hyps = ["a b c", "d e f g h i"];
        let out = align_chunks(&gt, &hyps, &AlignConfig::default()).unwrap();
        assert_eq!(out[1].gt_end_word, 5);
    }

    #[test]
    fn exhausted_pointer_yields_sentinels() {
        let gt = words("a b c");
        let hyps = ["a b c", "d e", "f"];
        let out = align_chunks(&gt, &hyps, &AlignConfig::default()).unwrap();
        for c in &out[1..] {
            assert!(c.is_empty() && c.low_confidence);
            assert_eq!(c.gt_start_word, 3);
        }
    }

    #[test]
    fn empty_hypothesis_does_not_move_pointer() {
        let gt = words("a b c d");
        let hyps = ["a b", "", "c d"];
        let out = align_chunks(&gt, &hyps, &AlignConfig::default()).unwrap();
        assert!(out[1].is_empty());
        assert_eq!((out[2].gt_start_word, out[2].gt_end_word), (2, 4));
    }

    #[test]
    fn empty_transcript_is_an_error() {
        let gt: Vec<&str> = vec![];
        assert_eq!(
            align_chunks(&gt, &["a"], &AlignConfig::default()),
            Err(AlignError::EmptyTranscript)
        );
    }
}
