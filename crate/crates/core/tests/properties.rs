use std::io::Cursor;

use proptest::prelude::*;

use speechprep::alignment::{indel_ratio, LcsPattern};
use speechprep::assignment::max_weight_assignment;
use speechprep::audio_io::{decode_wav, encode_wav, AudioBuffer};
use speechprep::config::PipelineConfig;
use speechprep::diar_formats::{
    parse_rttm, parse_uem, resolve_overlaps, segments_from_json, segments_to_json, write_rttm, write_uem,
    DiarizationSegment,
};
use speechprep::metrics::{der, edit_counts};
use speechprep::postproc::{postprocess_transcript, DedupConfig};
use speechprep::textnorm::{collapse_whitespace, normalize_transcript, NormConfig};
use speechprep_testkit as tk;

fn text_strategy() -> impl Strategy<Value = String> {
    let pieces = prop::sample::select(vec![
        "আমি", "তুমি", "হা", "ক", "ো", "\u{09C7}\u{09BE}", "্", "য়", " ", "  ", "\n", ">>", ">", "\u{200C}", "\u{200B}",
        "42", "2024", "।", "?", "x", "Ω",
    ]);
    prop::collection::vec(pieces, 0..30).prop_map(|v| v.concat())
}

fn segment_strategy() -> impl Strategy<Value = Vec<DiarizationSegment>> {
    prop::collection::vec((0u32..100_000, 1u32..20_000, 0usize..4), 0..25).prop_map(|v| {
        v.into_iter()
            .map(|(start, len, spk)| {
                let s = start as f64 / 1000.0;
                DiarizationSegment::new(s, s + len as f64 / 1000.0, ["A", "B", "C", "D"][spk])
            })
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn normalize_is_idempotent(text in text_strategy()) {
        let cfg = NormConfig::default();
        let once = normalize_transcript(&text, &cfg);
        prop_assert_eq!(normalize_transcript(&once, &cfg), once);
    }

    #[test]
    fn postprocess_is_idempotent(text in text_strategy()) {
        let cfg = DedupConfig::default();
        let once = postprocess_transcript(&text, &cfg);
        prop_assert_eq!(postprocess_transcript(&once, &cfg), once.clone());
        prop_assert_eq!(collapse_whitespace(&once), once);
    }

    #[test]
    fn indel_ratio_is_symmetric_and_bounded(a in "[a-dক-ঘ ]{0,80}", b in "[a-dক-ঘ ]{0,80}") {
        let ab = indel_ratio(&a, &b);
        prop_assert_eq!(ab, indel_ratio(&b, &a));
        prop_assert!((0.0..=100.0).contains(&ab));
        let ac: Vec<char> = a.chars().collect();
        let bc: Vec<char> = b.chars().collect();
        prop_assert_eq!(LcsPattern::new(&a).lcs(b.chars()), tk::lcs_dp(&ac, &bc));
    }

    #[test]
    fn edit_counts_are_consistent(r in prop::collection::vec(0u8..4, 0..20), h in prop::collection::vec(0u8..4, 0..20)) {
        let (s, d, i) = edit_counts(&r, &h);
        prop_assert!(s + d <= r.len());
        prop_assert_eq!(r.len() - d + i, h.len());
        let (s2, d2, i2) = edit_counts(&h, &r);
        // swapping sides swaps deletions and insertions
        prop_assert_eq!(s + d + i, s2 + d2 + i2);
    }

    #[test]
    fn resolved_segments_are_disjoint_and_cover_the_same_time(segs in segment_strategy()) {
        let out = resolve_overlaps(&segs);
        for w in out.windows(2) {
            prop_assert!(w[0].end_s <= w[1].start_s);
        }
        let union = |v: &[DiarizationSegment]| {
            let mut iv: Vec<(f64, f64)> = v.iter().map(|s| (s.start_s, s.end_s)).collect();
            iv.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut total = 0.0;
            let mut cur: Option<(f64, f64)> = None;
            for (a, b) in iv {
                cur = match cur {
                    Some((s, e)) if a <= e => Some((s, e.max(b))),
                    Some((s, e)) => { total += e - s; Some((a, b)) }
                    None => Some((a, b)),
                };
            }
            total + cur.map_or(0.0, |(s, e)| e - s)
        };
        prop_assert!((union(&segs) - union(&out)).abs() < 1e-6);
    }

    #[test]
    fn rttm_and_json_round_trip(segs in segment_strategy()) {
        let text = write_rttm("rec", &segs).unwrap();
        let back = parse_rttm(&text).unwrap().remove("rec").unwrap_or_default();
        prop_assert_eq!(back.len(), segs.len());
        let json = segments_from_json(&segments_to_json(&segs)).unwrap();
        prop_assert_eq!(json.len(), segs.len());
        // RTTM lines come out ordered by onset
        let mut sorted = segs.clone();
        sorted.sort_by(|a, b| a.start_s.total_cmp(&b.start_s));
        for (a, b) in json.iter().chain(&back).zip(segs.iter().chain(&sorted)) {
            prop_assert_eq!(&a.speaker, &b.speaker);
            prop_assert!((a.start_s - b.start_s).abs() <= 1e-3 && (a.end_s - b.end_s).abs() <= 1e-3);
        }
    }

    #[test]
    fn uem_round_trip(ms in 1u64..10_000_000) {
        let d = ms as f64 / 1000.0;
        let lines = parse_uem(&write_uem("u", d).unwrap()).unwrap();
        prop_assert!((lines[0].offset_s - d).abs() < 1e-9);
    }

    #[test]
    fn der_is_zero_for_identical_annotations(segs in segment_strategy()) {
        let r = resolve_overlaps(&segs);
        prop_assume!(!r.is_empty());
        let rep = der(&r, &r, 0.0, None).unwrap();
        prop_assert_eq!(rep.errors(), 0.0);
    }

    #[test]
    fn hungarian_matches_brute_force(rows in 1usize..7, cols in 1usize..7, seed in any::<u64>()) {
        use rand::Rng;
        let mut rng = tk::rng(seed);
        let w: Vec<Vec<f64>> = (0..rows).map(|_| (0..cols).map(|_| rng.random_range(0..20) as f64).collect()).collect();
        let a = max_weight_assignment(&w);
        let got: f64 = a.iter().enumerate().filter_map(|(i, j)| j.map(|j| w[i][j])).sum();
        prop_assert_eq!(got, tk::brute_force_assignment(&w));
        let mut used: Vec<usize> = a.iter().flatten().copied().collect();
        used.sort_unstable();
        used.dedup();
        prop_assert_eq!(used.len(), a.iter().flatten().count());
    }

    #[test]
    fn wav_round_trip_is_within_quantization(samples in prop::collection::vec(-1.0f32..1.0, 1..2000)) {
        let buf = AudioBuffer::new(samples, 16_000).unwrap();
        let back = decode_wav(Cursor::new(encode_wav(&buf).unwrap()), 16_000).unwrap();
        prop_assert_eq!(back.len(), buf.len());
        for (a, b) in back.samples.iter().zip(&buf.samples) {
            prop_assert!((a - b).abs() <= 1.0 / 32768.0 + 1e-6);
        }
    }

    #[test]
    fn config_text_round_trips(p in 0.0f64..=1.0, seed in any::<u64>(), workers in 1usize..64) {
        let mut cfg = PipelineConfig::default();
        cfg.augment.p_reverb = p;
        cfg.global_seed = seed;
        cfg.workers = workers;
        prop_assert_eq!(PipelineConfig::parse(&cfg.to_text()).unwrap(), cfg);
    }
}
