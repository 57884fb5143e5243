mod common;

use hybrid_ids::metrics::{confusion, evaluate};
use hybrid_ids::report::{parse_json, render_json, render_scores_csv, render_text};
use proptest::prelude::*;

use common::*;

proptest! {
    #[test]
    fn scores_match_brute_force(
        k in 2usize..7,
        pairs in proptest::collection::vec((0usize..64, 0usize..64), 0..300),
    ) {
        let truth: Vec<usize> = pairs.iter().map(|p| p.0 % k).collect();
        let pred: Vec<usize> = pairs.iter().map(|p| p.1 % k).collect();
        let report = evaluate(&truth, &pred, &numbered_label_map(k, 0)).unwrap();
        let brute = brute_scores(&truth, &pred, k);
        for c in 0..k {
            prop_assert!((report.per_class[c].precision - brute.precision[c]).abs() <= 1e-12);
            prop_assert!((report.per_class[c].recall - brute.recall[c]).abs() <= 1e-12);
            prop_assert!((report.per_class[c].f1 - brute.f1[c]).abs() <= 1e-12);
        }
        prop_assert!((report.macro_f1 - brute.macro_f1).abs() <= 1e-12);
        prop_assert!((report.weighted_f1 - brute.weighted_f1).abs() <= 1e-12);
        prop_assert!((report.accuracy - brute.accuracy).abs() <= 1e-12);
        prop_assert_eq!(report.confusion.total(), truth.len() as u64);
    }

    #[test]
    fn confusion_counts_every_pair_once(pairs in proptest::collection::vec((0usize..4, 0usize..4), 0..200)) {
        let truth: Vec<usize> = pairs.iter().map(|p| p.0).collect();
        let pred: Vec<usize> = pairs.iter().map(|p| p.1).collect();
        let cm = confusion(&truth, &pred, 4).unwrap();
        for t in 0..4 {
            for p in 0..4 {
                let n = pairs.iter().filter(|&&(a, b)| a == t && b == p).count() as u64;
                prop_assert_eq!(cm.get(t, p), n);
            }
        }
    }
}

#[test]
fn two_class_fixture_renders_expected_macro_f1() {
    let report = evaluate(&[0, 0, 1, 1], &[0, 0, 0, 1], &numbered_label_map(2, 0)).unwrap();
    assert!((report.macro_f1 - 11.0 / 15.0).abs() < 1e-15);
    assert!(render_text(&report).contains("0.7333"));
    assert!(render_scores_csv(&report).contains("macro_avg,,,0.733333"));
}

#[test]
fn json_report_round_trips() {
    let report = evaluate(&[0, 1, 2, 2], &[0, 2, 2, 1], &numbered_label_map(3, 1)).unwrap();
    let text = render_json(&report);
    assert_eq!(parse_json(&text).unwrap(), report);
    assert_eq!(render_json(&parse_json(&text).unwrap()), text);
}

#[test]
fn absent_class_scores_zero() {
    let report = evaluate(&[0, 0], &[0, 0], &numbered_label_map(3, 0)).unwrap();
    assert_eq!(report.per_class[2].f1, 0.0);
    assert_eq!(report.per_class[2].support, 0);
    assert!((report.macro_f1 - 1.0 / 3.0).abs() < 1e-15);
}
