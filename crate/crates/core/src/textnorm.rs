//! Bangla transcript normalization.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use unicode_normalization::{is_nfc, UnicodeNormalization};

/// Longest digit run that is spelled out.
pub const MAX_DIGIT_RUN: usize = 12;

const ZERO_WIDTH_SPACE: char = '\u{200B}';
const BYTE_ORDER_MARK: char = '\u{FEFF}';
const ZWNJ: char = '\u{200C}';
const ZWJ: char = '\u{200D}';

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormConfig {
    /// Four-digit numbers in this closed range are read as calendar years.
    pub year_range: (u32, u32),
    pub allowed_punct: BTreeSet<char>,
    pub strip_joiners: bool,
}

impl Default for NormConfig {
    fn default() -> Self {
        Self {
            year_range: (1000, 2099),
            allowed_punct: ['।', '.', ',', '?', '!', '-'].into_iter().collect(),
            strip_joiners: true,
        }
    }
}

impl NormConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.year_range.0 > self.year_range.1 {
            return Err(format!(
                "year_range lower bound {} exceeds upper bound {}",
                self.year_range.0, self.year_range.1
            ));
        }
        Ok(())
    }
}

/// Cardinal words for 0..=99.
const UNITS: [&str; 100] = [
    "শূন্য", "এক", "দুই", "তিন", "চার", "পাঁচ", "ছয়", "সাত", "আট", "নয়",
    "দশ", "এগারো", "বারো", "তেরো", "চৌদ্দ", "পনেরো", "ষোলো", "সতেরো", "আঠারো", "উনিশ",
    "বিশ", "একুশ", "বাইশ", "তেইশ", "চব্বিশ", "পঁচিশ", "ছাব্বিশ", "সাতাশ", "আটাশ", "ঊনত্রিশ",
    "ত্রিশ", "একত্রিশ", "বত্রিশ", "তেত্রিশ", "চৌত্রিশ", "পঁয়ত্রিশ", "ছত্রিশ", "সাঁইত্রিশ", "আটত্রিশ", "ঊনচল্লিশ",
    "চল্লিশ", "একচল্লিশ", "বিয়াল্লিশ", "তেতাল্লিশ", "চুয়াল্লিশ", "পঁয়তাল্লিশ", "ছেচল্লিশ", "সাতচল্লিশ", "আটচল্লিশ", "ঊনপঞ্চাশ",
    "পঞ্চাশ", "একান্ন", "বাহান্ন", "তিপ্পান্ন", "চুয়ান্ন", "পঞ্চান্ন", "ছাপ্পান্ন", "সাতান্ন", "আটান্ন", "ঊনষাট",
    "ষাট", "একষট্টি", "বাষট্টি", "তেষট্টি", "চৌষট্টি", "পঁয়ষট্টি", "ছেষট্টি", "সাতষট্টি", "আটষট্টি", "ঊনসত্তর",
    "সত্তর", "একাত্তর", "বাহাত্তর", "তিয়াত্তর", "চুয়াত্তর", "পঁচাত্তর", "ছিয়াত্তর", "সাতাত্তর", "আটাত্তর", "ঊনআশি",
    "আশি", "একাশি", "বিরাশি", "তিরাশি", "চুরাশি", "পঁচাশি", "ছিয়াশি", "সাতাশি", "আটাশি", "ঊননব্বই",
    "নব্বই", "একানব্বই", "বিরানব্বই", "তিরানব্বই", "চুরানব্বই", "পঁচানব্বই", "ছিয়ানব্বই", "সাতানব্বই", "আটানব্বই", "নিরানব্বই",
];

const HUNDRED_SUFFIX: &str = "শো";
const THOUSAND: &str = "হাজার";
const LAKH: &str = "লাখ";
const CRORE: &str = "কোটি";

fn push_below_thousand(n: u64, out: &mut Vec<String>) {
    debug_assert!(n < 1000);
    let hundreds = n / 100;
    let rest = n % 100;
    if hundreds > 0 {
        out.push(format!("{}{HUNDRED_SUFFIX}", UNITS[hundreds as usize]));
    }
    if rest > 0 {
        out.push(UNITS[rest as usize].to_string());
    }
}

fn push_cardinal(n: u64, out: &mut Vec<String>) {
    let crore = n / 10_000_000;
    let below_crore = n % 10_000_000;
    if crore > 0 {
        push_cardinal(crore, out);
        out.push(CRORE.to_string());
    }
    let lakh = below_crore / 100_000;
    let thousand = below_crore / 1000 % 100;
    let rest = below_crore % 1000;
    if lakh > 0 {
        out.push(UNITS[lakh as usize].to_string());
        out.push(LAKH.to_string());
    }
    if thousand > 0 {
        out.push(UNITS[thousand as usize].to_string());
        out.push(THOUSAND.to_string());
    }
    push_below_thousand(rest, out);
}

/// Standard cardinal reading in the Indian grouping (হাজার, লাখ, কোটি).
pub fn cardinal_words(n: u64) -> String {
    if n == 0 {
        return UNITS[0].to_string();
    }
    let mut out = Vec::new();
    push_cardinal(n, &mut out);
    out.join(" ")
}

/// Year reading: century pair with "শো", then the two-digit remainder.
pub fn year_words(year: u32) -> String {
    let century = (year / 100) as usize;
    let rest = (year % 100) as usize;
    let head = if century < 100 {
        format!("{}{HUNDRED_SUFFIX}", UNITS[century])
    } else {
        return cardinal_words(year as u64);
    };
    if rest == 0 {
        head
    } else {
        format!("{head} {}", UNITS[rest])
    }
}

/// A digit run that was too long to spell out and was left in place.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OverlongDigitRun {
    pub byte_offset: usize,
    pub digits: String,
}

fn spell_digit_run(run: &str, cfg: &NormConfig) -> String {
    let value: u64 = run.parse().expect("run of at most 12 ASCII digits");
    let (lo, hi) = cfg.year_range;
    if run.len() == 4 && (lo as u64..=hi as u64).contains(&value) {
        year_words(value as u32)
    } else {
        cardinal_words(value)
    }
}

/// Replace ASCII digit runs with Bangla words, reporting runs that were too long.
pub fn convert_digits(text: &str, cfg: &NormConfig) -> (String, Vec<OverlongDigitRun>) {
    let mut out = String::with_capacity(text.len() * 2);
    let mut warnings = Vec::new();
    let mut rest = text;
    let mut offset = 0;
    while let Some(start) = rest.find(|c: char| c.is_ascii_digit()) {
        let run_len = rest[start..]
            .find(|c: char| !c.is_ascii_digit())
            .unwrap_or(rest.len() - start);
        let run = &rest[start..start + run_len];
        out.push_str(&rest[..start]);
        if run_len > MAX_DIGIT_RUN {
            warnings.push(OverlongDigitRun {
                byte_offset: offset + start,
                digits: run.to_string(),
            });
            out.push_str(run);
        } else {
            if out.chars().next_back().is_some_and(|c| !c.is_whitespace()) {
                out.push(' ');
            }
            out.push_str(&spell_digit_run(run, cfg));
            if rest[start + run_len..]
                .chars()
                .next()
                .is_some_and(|c| !c.is_whitespace())
            {
                out.push(' ');
            }
        }
        offset += start + run_len;
        rest = &rest[start + run_len..];
    }
    out.push_str(rest);
    (out, warnings)
}

/// Spell out ASCII digit runs. Runs longer than [`MAX_DIGIT_RUN`] are kept and logged.
pub fn digits_to_bangla_words(text: &str, cfg: &NormConfig) -> String {
    let (out, warnings) = convert_digits(text, cfg);
    for w in warnings {
        log::warn!(
            "digit run of {} digits at byte {} left unconverted",
            w.digits.len(),
            w.byte_offset
        );
    }
    out
}

pub fn is_bengali_block(c: char) -> bool {
    ('\u{0980}'..='\u{09FF}').contains(&c)
}

fn is_allowed(c: char, cfg: &NormConfig) -> bool {
    is_bengali_block(c) || c.is_ascii_digit() || c.is_whitespace() || cfg.allowed_punct.contains(&c)
}

/// Delete every scalar outside the Bengali block, ASCII digits, whitespace and
/// the configured punctuation.
pub fn filter_bengali(text: &str, cfg: &NormConfig) -> String {
    text.chars().filter(|&c| is_allowed(c, cfg)).collect()
}

/// Collapse whitespace runs to one space and trim both ends.
pub fn collapse_whitespace(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// NFC plus zero-width character removal.
pub fn clean_unicode(text: &str, cfg: &NormConfig) -> String {
    text.nfc()
        .filter(|&c| match c {
            ZERO_WIDTH_SPACE | BYTE_ORDER_MARK => false,
            ZWNJ | ZWJ => !cfg.strip_joiners,
            _ => true,
        })
        .collect()
}

fn renormalize(text: String) -> String {
    if is_nfc(&text) {
        text
    } else {
        text.nfc().collect()
    }
}

/// Unicode cleanup, numeral spelling, script filtering, whitespace collapse.
///
/// Filtering can bring a base and a combining mark next to each other, so the
/// result is recomposed to keep the whole transform idempotent.
pub fn normalize_transcript(text: &str, cfg: &NormConfig) -> String {
    let cleaned = clean_unicode(text, cfg);
    let spelled = digits_to_bangla_words(&cleaned, cfg);
    let filtered = filter_bengali(&spelled, cfg);
    renormalize(collapse_whitespace(&filtered))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lexicon_is_nfc() {
        for w in UNITS.iter().chain(&["শো", "হাজার", "লাখ", "কোটি"]) {
            assert_eq!(w.nfc().collect::<String>(), *w);
        }
    }

    fn cfg() -> NormConfig {
        NormConfig::default()
    }

    #[test]
    fn single_digit() {
        assert_eq!(digits_to_bangla_words("5", &cfg()), "পাঁচ");
    }

    #[test]
    fn year_in_range() {
        assert_eq!(digits_to_bangla_words("1971", &cfg()), "উনিশশো একাত্তর");
        assert_eq!(digits_to_bangla_words("1900", &cfg()), "উনিশশো");
        assert_eq!(digits_to_bangla_words("2005", &cfg()), "বিশশো পাঁচ");
    }

    #[test]
    fn four_digits_outside_year_range() {
        assert_eq!(digits_to_bangla_words("2500", &cfg()), "দুই হাজার পাঁচশো");
        assert_eq!(digits_to_bangla_words("0999", &cfg()), "নয়শো নিরানব্বই");
    }

    #[test]
    fn cardinals_use_indian_grouping() {
        assert_eq!(cardinal_words(0), "শূন্য");
        assert_eq!(cardinal_words(100), "একশো");
        assert_eq!(cardinal_words(105), "একশো পাঁচ");
        assert_eq!(cardinal_words(12_345), "বারো হাজার তিনশো পঁয়তাল্লিশ");
        assert_eq!(cardinal_words(250_000), "দুই লাখ পঞ্চাশ হাজার");
        assert_eq!(cardinal_words(30_000_000), "তিন কোটি");
        assert_eq!(
            cardinal_words(999_999_999_999),
            "নিরানব্বই হাজার নয়শো নিরানব্বই কোটি নিরানব্বই লাখ নিরানব্বই হাজার নয়শো নিরানব্বই"
        );
    }

    #[test]
    fn no_digits_untouched() {
        assert_eq!(digits_to_bangla_words("abc", &cfg()), "abc");
    }

    #[test]
    fn inserted_words_are_space_separated() {
        assert_eq!(digits_to_bangla_words("5টাকা", &cfg()), "পাঁচ টাকা");
        assert_eq!(digits_to_bangla_words("ক 5 খ", &cfg()), "ক পাঁচ খ");
        assert_eq!(digits_to_bangla_words("ক12খ", &cfg()), "ক বারো খ");
    }

    #[test]
    fn overlong_runs_are_kept_and_reported() {
        let (out, warnings) = convert_digits("x 1234567890123 y", &cfg());
        assert_eq!(out, "x 1234567890123 y");
        assert_eq!(warnings.len(), 1);
        assert_eq!(warnings[0].byte_offset, 2);
    }

    #[test]
    fn bangla_digits_are_not_spelled() {
        assert_eq!(digits_to_bangla_words("১৯৭১", &cfg()), "১৯৭১");
    }

    #[test]
    fn filter_examples() {
        assert_eq!(filter_bengali("হ্যালো hello ।", &cfg()), "হ্যালো  ।");
        assert_eq!(filter_bengali("ABC123", &cfg()), "123");
        let pure = "আমি বাংলায় গান গাই।";
        assert_eq!(filter_bengali(pure, &cfg()), pure);
    }

    #[test]
    fn whitespace_examples() {
        assert_eq!(collapse_whitespace("ক  খ"), "ক খ");
        assert_eq!(collapse_whitespace(" ক\n খ "), "ক খ");
        assert_eq!(collapse_whitespace(""), "");
    }

    #[test]
    fn unicode_cleanup() {
        assert_eq!(clean_unicode("ক\u{200B}খ", &cfg()), "কখ");
        assert_eq!(clean_unicode("\u{09C7}\u{09BE}", &cfg()), "\u{09CB}");
        assert_eq!(clean_unicode("\u{FEFF}ক", &cfg()), "ক");
        let keep = NormConfig {
            strip_joiners: false,
            ..cfg()
        };
        assert_eq!(clean_unicode("র\u{200D}্য", &keep), "র\u{200D}্য");
        assert_eq!(clean_unicode("র\u{200D}্য", &cfg()), "র্য");
        assert_eq!(clean_unicode("সাধারণ লেখা", &cfg()), "সাধারণ লেখা");
    }

    #[test]
    fn full_pipeline() {
        assert_eq!(normalize_transcript("hello  5 টাকা", &cfg()), "পাঁচ টাকা");
        assert_eq!(normalize_transcript("", &cfg()), "");
        let clean = "আমি ১৯৭১ সালে জন্মেছি।";
        assert_eq!(normalize_transcript(clean, &cfg()), clean);
    }

    #[test]
    fn filtering_that_joins_marks_stays_idempotent() {
        let text = "ক\u{09C7}x\u{09BE}";
        let once = normalize_transcript(text, &cfg());
        assert_eq!(once, "ক\u{09CB}");
        assert_eq!(normalize_transcript(&once, &cfg()), once);
    }

    #[test]
    fn inverted_year_range_is_invalid() {
        let bad = NormConfig {
            year_range: (2100, 1000),
            ..cfg()
        };
        assert!(bad.validate().is_err());
    }
}
