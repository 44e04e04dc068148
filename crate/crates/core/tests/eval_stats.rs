use proptest::prelude::*;
use rationale_core::eval::{aggregate_seeds, confusion_matrix, macro_f1, paired_bootstrap};
use serde::Deserialize;

#[derive(Deserialize)]
struct ConfusionFixture {
    labels: Vec<String>,
    pairs: Vec<(String, String)>,
    tally: Vec<Vec<u64>>,
}

#[test]
fn confusion_matches_hand_tally() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/confusion_24.json");
    let fx: ConfusionFixture =
        serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    assert_eq!(fx.pairs.len(), 24);
    let gold: Vec<&str> = fx.pairs.iter().map(|p| p.0.as_str()).collect();
    let pred: Vec<&str> = fx.pairs.iter().map(|p| p.1.as_str()).collect();
    let m = confusion_matrix(&gold, &pred, &fx.labels).unwrap();
    assert_eq!(m.counts, fx.tally);
    assert_eq!(m.total(), 24);
    // joy 10/13, sadness 6/9, anger 8/11, neutral 12/15
    let want = (10.0 / 13.0 + 6.0 / 9.0 + 8.0 / 11.0 + 12.0 / 15.0) / 4.0;
    assert!((m.macro_f1() - want).abs() < 1e-12);
}

#[test]
fn seed_summary_hand_case() {
    let s = aggregate_seeds(&[0.40, 0.42, 0.44]).unwrap();
    assert!((s.mean - 0.42).abs() < 1e-12);
    assert!((s.std - 0.02).abs() < 1e-12);
    assert_eq!(aggregate_seeds(&[0.5, 0.5]).unwrap().std, 0.0);
    assert!(aggregate_seeds(&[0.5]).is_err());
}

fn accuracy(gold: &[u8], pred: &[u8]) -> f64 {
    gold.iter().zip(pred).filter(|(g, p)| g == p).count() as f64 / gold.len() as f64
}

#[test]
fn bootstrap_p_converges() {
    let gold = [1u8, 1, 1];
    let a = [1u8, 1, 0];
    let b = [0u8, 0, 1];
    for n in [2_000usize, 8_000, 32_000] {
        let p1 = paired_bootstrap(&gold, &a, &b, accuracy, n, 3)
            .unwrap()
            .p_value;
        let p2 = paired_bootstrap(&gold, &a, &b, accuracy, 2 * n, 3)
            .unwrap()
            .p_value;
        assert!(
            (p1 - p2).abs() < 3.0 / (n as f64).sqrt(),
            "b={n}: {p1} vs {p2}"
        );
    }
}

#[test]
fn bootstrap_result_is_independent_of_thread_count() {
    let gold: Vec<u8> = (0..30).map(|i| (i % 3) as u8).collect();
    let a: Vec<u8> = gold
        .iter()
        .enumerate()
        .map(|(i, g)| if i % 4 == 0 { 9 } else { *g })
        .collect();
    let b: Vec<u8> = gold
        .iter()
        .enumerate()
        .map(|(i, g)| if i % 2 == 0 { 9 } else { *g })
        .collect();
    let wide = paired_bootstrap(&gold, &a, &b, accuracy, 5000, 8).unwrap();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap();
    let narrow = pool.install(|| paired_bootstrap(&gold, &a, &b, accuracy, 5000, 8).unwrap());
    assert_eq!(wide, narrow);
}

const LABELS: [&str; 4] = ["a", "b", "c", "d"];

fn pairs() -> impl Strategy<Value = Vec<(usize, usize)>> {
    prop::collection::vec((0..4usize, 0..4usize), 1..40)
}

proptest! {
    #[test]
    fn macro_f1_is_bounded_and_order_free(p in pairs(), rot in 0usize..40) {
        let gold: Vec<&str> = p.iter().map(|x| LABELS[x.0]).collect();
        let pred: Vec<&str> = p.iter().map(|x| LABELS[x.1]).collect();
        let f = macro_f1(&gold, &pred, &LABELS).unwrap();
        prop_assert!((0.0..=1.0).contains(&f));
        let r = rot % gold.len();
        let (mut g2, mut p2) = (gold.clone(), pred.clone());
        g2.rotate_left(r);
        p2.rotate_left(r);
        prop_assert!((macro_f1(&g2, &p2, &LABELS).unwrap() - f).abs() < 1e-12);
    }

    #[test]
    fn perfect_score_needs_exact_match_over_every_label(p in pairs()) {
        let gold: Vec<&str> = p.iter().map(|x| LABELS[x.0]).collect();
        let pred: Vec<&str> = p.iter().map(|x| LABELS[x.1]).collect();
        let f = macro_f1(&gold, &pred, &LABELS).unwrap();
        let all_present = LABELS.iter().all(|l| gold.contains(l));
        prop_assert_eq!(f == 1.0, gold == pred && all_present);
    }

    #[test]
    fn confusion_rows_count_gold(p in pairs()) {
        let gold: Vec<&str> = p.iter().map(|x| LABELS[x.0]).collect();
        let pred: Vec<&str> = p.iter().map(|x| LABELS[x.1]).collect();
        let m = confusion_matrix(&gold, &pred, &LABELS).unwrap();
        for (i, l) in LABELS.iter().enumerate() {
            prop_assert_eq!(m.row_sums()[i], gold.iter().filter(|g| *g == l).count() as u64);
        }
    }
}
