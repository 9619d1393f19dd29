//! Cleanup of raw ASR output: repetition collapse and marker removal.

use serde::{Deserialize, Serialize};

use crate::textnorm::{clean_unicode, collapse_whitespace, NormConfig};

pub const SPEAKER_MARKER: &str = ">>";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DedupConfig {
    /// Longest repeated phrase (in words) that is searched for.
    pub max_phrase_words: usize,
    pub phrase_min_repeats: usize,
    /// Runs of one word this long are cut back to two copies.
    pub word_min_repeats: usize,
    /// Character n-gram lengths searched inside words.
    pub ngram_chars: (usize, usize),
    pub ngram_min_repeats: usize,
    pub max_iterations: usize,
}

impl Default for DedupConfig {
    fn default() -> Self {
        Self {
            max_phrase_words: 10,
            phrase_min_repeats: 2,
            word_min_repeats: 3,
            ngram_chars: (2, 10),
            ngram_min_repeats: 3,
            max_iterations: 10,
        }
    }
}

impl DedupConfig {
    pub fn validate(&self) -> Result<(), String> {
        let fields = [
            ("max_phrase_words", self.max_phrase_words),
            ("phrase_min_repeats", self.phrase_min_repeats),
            ("word_min_repeats", self.word_min_repeats),
            ("ngram_chars lower bound", self.ngram_chars.0),
            ("ngram_min_repeats", self.ngram_min_repeats),
            ("max_iterations", self.max_iterations),
        ];
        if let Some((name, _)) = fields.iter().find(|(_, v)| *v == 0) {
            return Err(format!("{name} must be at least 1"));
        }
        if self.ngram_chars.0 > self.ngram_chars.1 {
            return Err("ngram_chars lower bound exceeds upper bound".into());
        }
        Ok(())
    }
}

/// A word with the whitespace that precedes it.
#[derive(Debug, Clone)]
struct Token<'a> {
    sep: &'a str,
    word: String,
}

fn tokenize(text: &str) -> (Vec<Token<'_>>, &str) {
    let mut tokens = Vec::new();
    let mut rest = text;
    loop {
        let word_start = rest.find(|c: char| !c.is_whitespace()).unwrap_or(rest.len());
        if word_start == rest.len() {
            return (tokens, rest);
        }
        let after = &rest[word_start..];
        let word_len = after.find(char::is_whitespace).unwrap_or(after.len());
        tokens.push(Token {
            sep: &rest[..word_start],
            word: after[..word_len].to_string(),
        });
        rest = &after[word_len..];
    }
}

fn render(tokens: &[Token<'_>], trailing: &str) -> String {
    let mut out = String::new();
    for t in tokens {
        out.push_str(t.sep);
        out.push_str(&t.word);
    }
    out.push_str(trailing);
    out
}

fn same_phrase(tokens: &[Token<'_>], a: usize, b: usize, n: usize) -> bool {
    (0..n).all(|k| tokens[a + k].word == tokens[b + k].word)
}

fn collapse_phrases(tokens: &mut Vec<Token<'_>>, cfg: &DedupConfig) -> bool {
    let mut changed = false;
    for n in (2..=cfg.max_phrase_words).rev() {
        let mut i = 0;
        while i + 2 * n <= tokens.len() {
            let mut copies = 1;
            while i + (copies + 1) * n <= tokens.len() && same_phrase(tokens, i, i + copies * n, n) {
                copies += 1;
            }
            if copies >= cfg.phrase_min_repeats.max(2) {
                tokens.drain(i + n..i + copies * n);
                changed = true;
            }
            i += 1;
        }
    }
    changed
}

fn collapse_word_runs(tokens: &mut Vec<Token<'_>>, cfg: &DedupConfig) -> bool {
    let keep = 2.min(cfg.word_min_repeats.saturating_sub(1)).max(1);
    let mut changed = false;
    let mut i = 0;
    while i < tokens.len() {
        let mut j = i + 1;
        while j < tokens.len() && tokens[j].word == tokens[i].word {
            j += 1;
        }
        if j - i >= cfg.word_min_repeats {
            tokens.drain(i + keep..j);
            changed = true;
        }
        i += keep.min(j - i).max(1);
    }
    changed
}

/// True if `unit` is a repetition of a strictly shorter unit.
fn is_periodic(unit: &[char]) -> bool {
    let n = unit.len();
    (1..n).any(|p| n % p == 0 && unit.chunks(p).all(|c| c == &unit[..p]))
}

fn collapse_ngrams_in_word(word: &str, cfg: &DedupConfig) -> Option<String> {
    let (lo, hi) = cfg.ngram_chars;
    let mut chars: Vec<char> = word.chars().collect();
    let mut changed = false;
    let mut i = 0;
    while i < chars.len() {
        let mut collapsed = false;
        for n in (lo.max(1)..=hi).rev() {
            if i + n * cfg.ngram_min_repeats > chars.len() {
                continue;
            }
            let unit = &chars[i..i + n];
            if is_periodic(unit) {
                continue;
            }
            let mut copies = 1;
            while i + (copies + 1) * n <= chars.len() && chars[i + copies * n..i + (copies + 1) * n] == *unit {
                copies += 1;
            }
            if copies >= cfg.ngram_min_repeats {
                chars.drain(i + n..i + copies * n);
                changed = true;
                collapsed = true;
                break;
            }
        }
        if !collapsed {
            i += 1;
        }
    }
    changed.then(|| chars.into_iter().collect())
}

fn collapse_ngrams(tokens: &mut [Token<'_>], cfg: &DedupConfig) -> bool {
    let mut changed = false;
    for t in tokens.iter_mut() {
        if let Some(w) = collapse_ngrams_in_word(&t.word, cfg) {
            t.word = w;
            changed = true;
        }
    }
    changed
}

/// Collapse hallucinated repetitions until nothing changes (or the iteration cap is hit).
///
/// Per pass: repeated phrases (longest first) keep one copy, single-word runs
/// keep two copies, and repeated character n-grams inside a word keep one copy.
/// Whitespace between surviving words is left as it was.
pub fn dedup_text(text: &str, cfg: &DedupConfig) -> String {
    let (mut tokens, trailing) = tokenize(text);
    for _ in 0..cfg.max_iterations {
        let a = collapse_phrases(&mut tokens, cfg);
        let b = collapse_word_runs(&mut tokens, cfg);
        let c = collapse_ngrams(&mut tokens, cfg);
        if !(a || b || c) {
            break;
        }
    }
    render(&tokens, trailing)
}

/// Remove speaker-change markers. Each marker acts as a word boundary.
pub fn strip_markers(text: &str) -> String {
    if !text.contains(SPEAKER_MARKER) {
        return text.to_string();
    }
    collapse_whitespace(&text.replace(SPEAKER_MARKER, " "))
}

/// Unicode cleanup, marker removal, deduplication and whitespace collapse.
///
/// Markers go before deduplication: a marker glued to a word would otherwise
/// hide a repeat that only shows up on a second pass.
pub fn postprocess_transcript(text: &str, cfg: &DedupConfig) -> String {
    let cleaned = clean_unicode(text, &NormConfig::default());
    collapse_whitespace(&dedup_text(&strip_markers(&cleaned), cfg))
}
