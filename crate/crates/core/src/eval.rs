//! Scoring and statistics: macro-F1, confusion matrices, the paired
//! bootstrap test, seed aggregation, and Lindell's multi-item r*WG(J).

use std::collections::{BTreeMap, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default number of bootstrap resamples.
pub const DEFAULT_BOOTSTRAP_SAMPLES: usize = 10_000;
/// Default significance level used when starring results.
pub const DEFAULT_ALPHA: f64 = 0.05;

/// Rows are gold labels, columns predictions, both in `labels` order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub labels: Vec<String>,
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn row_sums(&self) -> Vec<u64> {
        self.counts.iter().map(|r| r.iter().sum()).collect()
    }

    /// Per-class F1 as `2TP / (2TP + FP + FN)`, zero when the denominator is zero.
    pub fn per_class_f1(&self) -> Vec<f64> {
        let n = self.labels.len();
        (0..n)
            .map(|c| {
                let tp = self.counts[c][c];
                let fn_: u64 = self.counts[c].iter().sum::<u64>() - tp;
                let fp: u64 = (0..n).map(|r| self.counts[r][c]).sum::<u64>() - tp;
                let denom = 2 * tp + fp + fn_;
                if denom == 0 {
                    0.0
                } else {
                    (2 * tp) as f64 / denom as f64
                }
            })
            .collect()
    }

    /// Unweighted mean of per-class F1 over every label, absent ones included.
    pub fn macro_f1(&self) -> f64 {
        let f1 = self.per_class_f1();
        if f1.is_empty() {
            return 0.0;
        }
        f1.iter().sum::<f64>() / f1.len() as f64
    }

    pub fn add(&mut self, other: &ConfusionMatrix) -> Result<()> {
        if self.labels != other.labels {
            return Err(Error::LabelSetMismatch(
                "confusion matrices over different labels".into(),
            ));
        }
        for (row, orow) in self.counts.iter_mut().zip(&other.counts) {
            for (c, o) in row.iter_mut().zip(orow) {
                *c += o;
            }
        }
        Ok(())
    }
}

fn label_index<S: AsRef<str>>(labels: &[S]) -> HashMap<&str, usize> {
    labels
        .iter()
        .enumerate()
        .map(|(i, l)| (l.as_ref(), i))
        .collect()
}

/// Tallies gold-versus-predicted counts.
pub fn confusion_matrix<G, P, L>(gold: &[G], pred: &[P], labels: &[L]) -> Result<ConfusionMatrix>
where
    G: AsRef<str>,
    P: AsRef<str>,
    L: AsRef<str>,
{
    if gold.len() != pred.len() {
        return Err(Error::LengthMismatch(format!(
            "{} gold labels vs {} predictions",
            gold.len(),
            pred.len()
        )));
    }
    if gold.is_empty() {
        return Err(Error::InvalidInput("no examples to score".into()));
    }
    let index = label_index(labels);
    let lookup = |l: &str| {
        index
            .get(l)
            .copied()
            .ok_or_else(|| Error::LabelNotInSet(l.to_string()))
    };
    let n = labels.len();
    let mut counts = vec![vec![0u64; n]; n];
    for (g, p) in gold.iter().zip(pred) {
        counts[lookup(g.as_ref())?][lookup(p.as_ref())?] += 1;
    }
    Ok(ConfusionMatrix {
        labels: labels.iter().map(|l| l.as_ref().to_string()).collect(),
        counts,
    })
}

pub fn macro_f1<G, P, L>(gold: &[G], pred: &[P], labels: &[L]) -> Result<f64>
where
    G: AsRef<str>,
    P: AsRef<str>,
    L: AsRef<str>,
{
    Ok(confusion_matrix(gold, pred, labels)?.macro_f1())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapResult {
    pub delta_observed: f64,
    pub b: usize,
    pub exceed_count: usize,
    pub p_value: f64,
    pub seed: u64,
    pub degenerate: bool,
}

const BOOTSTRAP_BLOCK: usize = 1024;

/// Paired bootstrap test that system A beats system B under `metric`.
///
/// With `delta = metric(A) - metric(B)` on the full set, each of `b`
/// resamples (with replacement, original size) counts when its own delta
/// exceeds `2 * delta`; `p = count / b`. A non-positive observed delta is
/// reported as degenerate with `p = 1` and no sampling.
///
/// Iterations run in fixed-size blocks, each with its own stream of a
/// generator seeded by `seed`, so the result does not depend on how the
/// blocks are scheduled.
pub fn paired_bootstrap<T, F>(
    gold: &[T],
    pred_a: &[T],
    pred_b: &[T],
    metric: F,
    b: usize,
    seed: u64,
) -> Result<BootstrapResult>
where
    T: Clone + Send + Sync,
    F: Fn(&[T], &[T]) -> f64 + Sync,
{
    let n = gold.len();
    if n == 0 {
        return Err(Error::InvalidInput("bootstrap over empty inputs".into()));
    }
    if pred_a.len() != n || pred_b.len() != n {
        return Err(Error::LengthMismatch(
            "bootstrap inputs differ in length".into(),
        ));
    }
    if b == 0 {
        return Err(Error::InvalidInput(
            "bootstrap needs at least one sample".into(),
        ));
    }
    let delta = metric(gold, pred_a) - metric(gold, pred_b);
    if delta <= 0.0 {
        return Ok(BootstrapResult {
            delta_observed: delta,
            b,
            exceed_count: 0,
            p_value: 1.0,
            seed,
            degenerate: true,
        });
    }

    let blocks = b.div_ceil(BOOTSTRAP_BLOCK);
    let exceed_count: usize = (0..blocks)
        .into_par_iter()
        .map(|block| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(block as u64);
            let iterations = BOOTSTRAP_BLOCK.min(b - block * BOOTSTRAP_BLOCK);
            let mut g = Vec::with_capacity(n);
            let mut a = Vec::with_capacity(n);
            let mut bb = Vec::with_capacity(n);
            let mut count = 0;
            for _ in 0..iterations {
                g.clear();
                a.clear();
                bb.clear();
                for _ in 0..n {
                    let i = rng.gen_range(0..n);
                    g.push(gold[i].clone());
                    a.push(pred_a[i].clone());
                    bb.push(pred_b[i].clone());
                }
                if metric(&g, &a) - metric(&g, &bb) > 2.0 * delta {
                    count += 1;
                }
            }
            count
        })
        .sum();

    Ok(BootstrapResult {
        delta_observed: delta,
        b,
        exceed_count,
        p_value: exceed_count as f64 / b as f64,
        seed,
        degenerate: false,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedSummary {
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

impl SeedSummary {
    /// `mean±std` in percentage points with one decimal, e.g. `42.0±2.0`.
    pub fn cell(&self) -> String {
        format!("{:.1}±{:.1}", self.mean * 100.0, self.std * 100.0)
    }
}

/// Mean and sample standard deviation (n - 1 denominator) over seeds.
pub fn aggregate_seeds(scores: &[f64]) -> Result<SeedSummary> {
    if scores.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "need at least 2 seed reports, got {}",
            scores.len()
        )));
    }
    let n = scores.len() as f64;
    let mean = scores.iter().sum::<f64>() / n;
    let var = scores.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok(SeedSummary {
        mean,
        std: var.sqrt(),
        n: scores.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IrrReport {
    pub scale_points: u32,
    pub per_item_variance: Vec<f64>,
    pub mean_variance: f64,
    pub null_variance: f64,
    pub r_wg: f64,
}

/// Variance of a uniform null over `A` scale points: `(A^2 - 1) / 12`.
pub fn null_variance(scale_points: u32) -> f64 {
    let a = f64::from(scale_points);
    (a * a - 1.0) / 12.0
}

/// Lindell's r*WG(J): one minus the mean per-item rating variance (n - 1
/// denominator) over the uniform-null variance. Rows are items, columns raters.
pub fn lindell_irr(ratings: &[Vec<u32>], scale_points: u32) -> Result<IrrReport> {
    if scale_points < 2 {
        return Err(Error::InvalidInput(
            "a rating scale needs at least 2 points".into(),
        ));
    }
    if ratings.is_empty() {
        return Err(Error::InvalidInput("no items to rate".into()));
    }
    let raters = ratings[0].len();
    if raters < 2 {
        return Err(Error::InvalidInput(
            "agreement needs at least 2 raters".into(),
        ));
    }
    let mut per_item_variance = Vec::with_capacity(ratings.len());
    for (item, row) in ratings.iter().enumerate() {
        if row.len() != raters {
            return Err(Error::LengthMismatch(format!(
                "item {item} has {} ratings, expected {raters}",
                row.len()
            )));
        }
        if let Some((rater, &value)) = row
            .iter()
            .enumerate()
            .find(|(_, v)| !(1..=scale_points).contains(*v))
        {
            return Err(Error::RatingOutOfScale {
                value,
                scale: scale_points,
                item,
                rater,
            });
        }
        let k = raters as f64;
        let mean = row.iter().map(|&v| f64::from(v)).sum::<f64>() / k;
        let var = row
            .iter()
            .map(|&v| (f64::from(v) - mean).powi(2))
            .sum::<f64>()
            / (k - 1.0);
        per_item_variance.push(var);
    }
    let mean_variance = per_item_variance.iter().sum::<f64>() / per_item_variance.len() as f64;
    let null = null_variance(scale_points);
    Ok(IrrReport {
        scale_points,
        per_item_variance,
        mean_variance,
        null_variance: null,
        r_wg: 1.0 - mean_variance / null,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapSummary {
    pub vs: String,
    pub p_value: f64,
    pub b: usize,
    pub seed: u64,
    pub delta_observed: f64,
    pub degenerate: bool,
    pub significant: bool,
    pub alpha: f64,
}

/// Scores for one configuration across seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub metric: String,
    pub per_seed: BTreeMap<u64, f64>,
    pub mean: f64,
    pub std: f64,
    /// Pooled over all seeds.
    pub confusion: Vec<Vec<u64>>,
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bootstrap: Option<BootstrapSummary>,
}

impl EvalReport {
    /// Builds a report from per-seed `(gold, predicted)` label lists.
    pub fn from_seeds<L: AsRef<str>>(
        runs: &BTreeMap<u64, (Vec<String>, Vec<String>)>,
        labels: &[L],
    ) -> Result<Self> {
        let mut per_seed = BTreeMap::new();
        let mut pooled: Option<ConfusionMatrix> = None;
        for (seed, (gold, pred)) in runs {
            let cm = confusion_matrix(gold, pred, labels)?;
            per_seed.insert(*seed, cm.macro_f1());
            match &mut pooled {
                Some(p) => p.add(&cm)?,
                None => pooled = Some(cm),
            }
        }
        let scores: Vec<f64> = per_seed.values().copied().collect();
        let summary = aggregate_seeds(&scores)?;
        let pooled = pooled.expect("aggregate_seeds requires runs");
        Ok(Self {
            metric: "macro_f1".to_string(),
            per_seed,
            mean: summary.mean,
            std: summary.std,
            n: pooled.total() as usize,
            confusion: pooled.counts,
            bootstrap: None,
        })
    }

    pub fn summary(&self) -> SeedSummary {
        SeedSummary {
            mean: self.mean,
            std: self.std,
            n: self.per_seed.len(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const ABC: [&str; 3] = ["A", "B", "C"];

    #[test]
    fn identity_gives_one() {
        let g = ["A", "B", "C", "A"];
        assert_eq!(macro_f1(&g, &g, &ABC).unwrap(), 1.0);
    }

    #[test]
    fn hand_case_is_seven_ninths() {
        let f = macro_f1(&["A", "A", "B", "C"], &["A", "B", "B", "C"], &ABC).unwrap();
        assert!((f - 7.0 / 9.0).abs() < 1e-12);
    }

    #[test]
    fn no_true_positives_gives_zero() {
        let labels: Vec<String> = (0..8).map(|i| format!("L{i}")).collect();
        let gold = vec!["L0"; 5];
        let pred = vec!["L1"; 5];
        assert_eq!(macro_f1(&gold, &pred, &labels).unwrap(), 0.0);
    }

    #[test]
    fn scoring_errors() {
        assert!(matches!(
            macro_f1(&["A"], &["A", "B"], &ABC),
            Err(Error::LengthMismatch(_))
        ));
        assert!(matches!(
            macro_f1(&["A"], &["Z"], &ABC),
            Err(Error::LabelNotInSet(_))
        ));
        assert!(macro_f1::<&str, &str, &str>(&[], &[], &ABC).is_err());
    }

    #[test]
    fn confusion_cases() {
        let cm = confusion_matrix(&["A", "B", "C"], &["A", "B", "C"], &ABC).unwrap();
        for (i, row) in cm.counts.iter().enumerate() {
            for (j, &c) in row.iter().enumerate() {
                assert_eq!(c, u64::from(i == j));
            }
        }
        let cm = confusion_matrix(&["A"], &["B"], &ABC).unwrap();
        assert_eq!(cm.counts[0][1], 1);
        assert_eq!(cm.total(), 1);
    }

    fn accuracy(g: &[u8], p: &[u8]) -> f64 {
        g.iter().zip(p).filter(|(a, b)| a == b).count() as f64 / g.len() as f64
    }

    #[test]
    fn identical_systems_are_degenerate() {
        let g = [1u8, 0, 1];
        let r = paired_bootstrap(&g, &g, &g, accuracy, 1000, 3).unwrap();
        assert!(r.degenerate);
        assert_eq!(r.p_value, 1.0);
        assert_eq!(r.exceed_count, 0);
    }

    #[test]
    fn bootstrap_is_seeded() {
        let g = [0u8, 0, 0];
        let a = [0u8, 0, 1];
        let b = [1u8, 1, 0];
        let r1 = paired_bootstrap(&g, &a, &b, accuracy, 5000, 11).unwrap();
        let r2 = paired_bootstrap(&g, &a, &b, accuracy, 5000, 11).unwrap();
        assert_eq!(r1, r2);
        assert!(paired_bootstrap::<u8, _>(&[], &[], &[], accuracy, 10, 0).is_err());
    }

    #[test]
    fn seed_aggregation() {
        let s = aggregate_seeds(&[0.40, 0.42, 0.44]).unwrap();
        assert!((s.mean - 0.42).abs() < 1e-12);
        assert!((s.std - 0.02).abs() < 1e-12);
        assert_eq!(s.cell(), "42.0±2.0");
        assert_eq!(aggregate_seeds(&[0.5, 0.5]).unwrap().std, 0.0);
        assert!(aggregate_seeds(&[0.5]).is_err());
    }

    #[test]
    fn lindell_cases() {
        assert_eq!(lindell_irr(&[vec![3, 3], vec![5, 5]], 5).unwrap().r_wg, 1.0);
        let r = lindell_irr(&[vec![4, 5], vec![5, 5]], 5).unwrap();
        assert!((r.mean_variance - 0.25).abs() < 1e-12);
        assert!((r.r_wg - 0.875).abs() < 1e-12);
        let r = lindell_irr(&[vec![1, 5]], 5).unwrap();
        assert!((r.per_item_variance[0] - 8.0).abs() < 1e-12);
        assert!((r.r_wg + 3.0).abs() < 1e-12);
        assert_eq!(null_variance(5), 2.0);
        assert!(matches!(
            lindell_irr(&[vec![1, 6]], 5),
            Err(Error::RatingOutOfScale { value: 6, .. })
        ));
        assert!(lindell_irr(&[vec![1]], 5).is_err());
    }

    #[test]
    fn report_from_seeds() {
        let labels = ["A", "B", "C"];
        let run = |p: &[&str]| {
            (
                vec!["A".to_string(), "B".into(), "C".into()],
                p.iter().map(|s| s.to_string()).collect::<Vec<_>>(),
            )
        };
        let runs = BTreeMap::from([(1, run(&["A", "B", "C"])), (2, run(&["A", "A", "C"]))]);
        let r = EvalReport::from_seeds(&runs, &labels).unwrap();
        assert_eq!(r.n, 6);
        assert_eq!(r.per_seed[&1], 1.0);
        let mean = r.per_seed.values().sum::<f64>() / 2.0;
        assert!((r.mean - mean).abs() < 1e-12);
        let row_sums: Vec<u64> = r.confusion.iter().map(|row| row.iter().sum()).collect();
        assert_eq!(row_sums, vec![2, 2, 2]);
    }

    fn label_vec() -> impl Strategy<Value = Vec<(usize, usize)>> {
        proptest::collection::vec((0usize..4, 0usize..4), 1..30)
    }

    proptest! {
        #[test]
        fn macro_f1_bounds_and_identity(pairs in label_vec()) {
            let labels = ["w", "x", "y", "z"];
            let g: Vec<&str> = pairs.iter().map(|p| labels[p.0]).collect();
            let p: Vec<&str> = pairs.iter().map(|p| labels[p.1]).collect();
            let f = macro_f1(&g, &p, &labels).unwrap();
            prop_assert!((0.0..=1.0).contains(&f));
            // absent classes count as zero, so 1.0 needs every label present
            let all_present = labels.iter().all(|l| g.contains(l));
            prop_assert_eq!(f == 1.0, g == p && all_present);
        }

        #[test]
        fn macro_f1_is_permutation_and_relabel_invariant(pairs in label_vec(), rot in 1usize..4) {
            let labels = ["w", "x", "y", "z"];
            let g: Vec<&str> = pairs.iter().map(|p| labels[p.0]).collect();
            let p: Vec<&str> = pairs.iter().map(|p| labels[p.1]).collect();
            let f = macro_f1(&g, &p, &labels).unwrap();

            let mut rg = g.clone();
            let mut rp = p.clone();
            rg.reverse();
            rp.reverse();
            prop_assert!((macro_f1(&rg, &rp, &labels).unwrap() - f).abs() < 1e-12);

            let relabel = |s: &str| labels[(labels.iter().position(|l| *l == s).unwrap() + rot) % 4];
            let mg: Vec<&str> = g.iter().map(|s| relabel(s)).collect();
            let mp: Vec<&str> = p.iter().map(|s| relabel(s)).collect();
            let ml: Vec<&str> = labels.iter().map(|s| relabel(s)).collect();
            prop_assert!((macro_f1(&mg, &mp, &ml).unwrap() - f).abs() < 1e-12);
        }

        #[test]
        fn lindell_decreases_with_item_variance(
            rows in proptest::collection::vec(proptest::collection::vec(1u32..=5, 3), 1..6),
            item in 0usize..6,
        ) {
            let item = item % rows.len();
            let base = lindell_irr(&rows, 5).unwrap();
            prop_assert!(base.r_wg <= 1.0);
            prop_assert_eq!(base.r_wg == 1.0, base.per_item_variance.iter().all(|v| *v == 0.0));
            // spreading one item's ratings raises its variance
            let mut wider = rows.clone();
            wider[item] = vec![1, 5, 1];
            let more = lindell_irr(&wider, 5).unwrap();
            if more.per_item_variance[item] > base.per_item_variance[item] {
                prop_assert!(more.r_wg < base.r_wg);
            }
        }
    }
}
