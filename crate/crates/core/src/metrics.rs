//! Evaluation suite: confusion-based metrics, macro-F1, balanced accuracy,
//! ROC-AUC, and validation-set decision-threshold selection.
//!
//! The positive class is the attack class (code 1). Degenerate 0/0 ratios
//! are defined as 0 so that macro-F1 stays total on all inputs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Standard binary confusion counts with Attack as the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub true_pos: u64,
    pub false_pos: u64,
    pub true_neg: u64,
    pub false_neg: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.true_pos + self.false_pos + self.true_neg + self.false_neg
    }
}

/// The full metric set reported for one evaluated model.
///
/// `roc_auc` and `threshold` are filled by callers that have scores and a
/// selected decision threshold; plain confusion-based evaluation leaves
/// them empty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub balanced_accuracy: f64,
    pub precision_pos: f64,
    pub recall_pos: f64,
    pub f1_pos: f64,
    pub f1_neg: f64,
    pub macro_f1: f64,
    pub roc_auc: Option<f64>,
    pub threshold: Option<f64>,
}

/// 0/0 → 0; every other division is ordinary.
fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn f1(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// Counts confusion entries for binary label vectors.
pub fn confusion(y_true: &[u8], y_pred: &[u8]) -> Result<ConfusionCounts> {
    if y_true.len() != y_pred.len() {
        return Err(Error::Usage(format!(
            "{} true labels vs {} predictions",
            y_true.len(),
            y_pred.len()
        )));
    }
    if y_true.is_empty() {
        return Err(Error::Usage("cannot build a confusion matrix from zero samples".to_string()));
    }
    let mut c = ConfusionCounts { true_pos: 0, false_pos: 0, true_neg: 0, false_neg: 0 };
    for (&t, &p) in y_true.iter().zip(y_pred) {
        match (t, p) {
            (1, 1) => c.true_pos += 1,
            (0, 1) => c.false_pos += 1,
            (0, 0) => c.true_neg += 1,
            (1, 0) => c.false_neg += 1,
            _ => {
                return Err(Error::Usage(format!(
                    "labels must be 0 or 1, got true={t} pred={p}"
                )))
            }
        }
    }
    Ok(c)
}

/// Derives the confusion-based metric set. ROC-AUC and threshold are left
/// empty; use [`roc_auc`] and [`select_threshold`] to fill them.
pub fn classification_metrics(c: &ConfusionCounts) -> MetricsReport {
    let precision_pos = ratio(c.true_pos, c.true_pos + c.false_pos);
    let recall_pos = ratio(c.true_pos, c.true_pos + c.false_neg);
    let precision_neg = ratio(c.true_neg, c.true_neg + c.false_neg);
    let recall_neg = ratio(c.true_neg, c.true_neg + c.false_pos);
    let f1_pos = f1(precision_pos, recall_pos);
    let f1_neg = f1(precision_neg, recall_neg);
    MetricsReport {
        accuracy: ratio(c.true_pos + c.true_neg, c.total()),
        balanced_accuracy: (recall_pos + recall_neg) / 2.0,
        precision_pos,
        recall_pos,
        f1_pos,
        f1_neg,
        macro_f1: (f1_pos + f1_neg) / 2.0,
        roc_auc: None,
        threshold: None,
    }
}

fn check_scores(y_true: &[u8], scores: &[f64]) -> Result<(u64, u64)> {
    if y_true.len() != scores.len() {
        return Err(Error::Usage(format!(
            "{} labels vs {} scores",
            y_true.len(),
            scores.len()
        )));
    }
    if let Some(bad) = scores.iter().find(|s| !s.is_finite()) {
        return Err(Error::Usage(format!("score {bad} is not finite")));
    }
    let n_pos = y_true.iter().filter(|&&l| l == 1).count() as u64;
    let n_neg = y_true.len() as u64 - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::UndefinedMetric(
            "ROC-AUC and threshold selection need both classes present".to_string(),
        ));
    }
    Ok((n_pos, n_neg))
}

/// Area under the ROC curve as the Mann-Whitney statistic: the fraction of
/// (positive, negative) pairs ranked correctly, ties counted as one half.
/// Computed with average ranks in O(n log n); equal to exhaustive pairwise
/// counting.
pub fn roc_auc(y_true: &[u8], scores: &[f64]) -> Result<f64> {
    let (n_pos, n_neg) = check_scores(y_true, scores)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).unwrap());

    // Average 1-based rank within each tie block, summed over positives.
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            j += 1;
        }
        let avg_rank = (i + 1 + j) as f64 / 2.0;
        for &idx in &order[i..j] {
            if y_true[idx] == 1 {
                rank_sum_pos += avg_rank;
            }
        }
        i = j;
    }
    let n_pos_f = n_pos as f64;
    let u = rank_sum_pos - n_pos_f * (n_pos_f + 1.0) / 2.0;
    Ok(u / (n_pos_f * n_neg as f64))
}

/// Applies a decision threshold: scores at or above it predict positive.
pub fn apply_threshold(scores: &[f64], threshold: f64) -> Vec<u8> {
    scores.iter().map(|&s| u8::from(s >= threshold)).collect()
}

/// Candidate thresholds for [`select_threshold`]: the midpoints of
/// consecutive distinct sorted scores plus the anchors {0, 0.5, 1}, sorted
/// and deduplicated. Exposed so tests can scan the same grid exhaustively.
pub fn threshold_candidates(scores: &[f64]) -> Vec<f64> {
    let mut sorted: Vec<f64> = scores.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    sorted.dedup();
    let mut candidates = vec![0.0, 0.5, 1.0];
    candidates.extend(sorted.windows(2).map(|w| (w[0] + w[1]) / 2.0));
    candidates.sort_by(|a, b| a.partial_cmp(b).unwrap());
    candidates.dedup();
    candidates
}

/// Picks the decision threshold that maximizes validation macro-F1 over
/// [`threshold_candidates`]. Ties go to the candidate closest to 0.5, and
/// an exact distance tie to the smaller threshold, so the choice is
/// deterministic.
pub fn select_threshold(y_true_val: &[u8], scores_val: &[f64]) -> Result<f64> {
    let (n_pos, n_neg) = check_scores(y_true_val, scores_val)?;

    // Sort scores with their labels once; every candidate's confusion then
    // comes from a prefix count instead of a fresh pass.
    let mut pairs: Vec<(f64, u8)> = scores_val
        .iter()
        .copied()
        .zip(y_true_val.iter().copied())
        .collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut pos_prefix = Vec::with_capacity(pairs.len() + 1);
    pos_prefix.push(0u64);
    for &(_, label) in &pairs {
        pos_prefix.push(pos_prefix.last().unwrap() + u64::from(label));
    }

    let mut best: Option<(f64, f64)> = None; // (macro_f1, threshold)
    let mut lo = 0usize; // first index with score >= candidate
    for t in threshold_candidates(scores_val) {
        while lo < pairs.len() && pairs[lo].0 < t {
            lo += 1;
        }
        let pos_below = pos_prefix[lo];
        let neg_below = lo as u64 - pos_below;
        let c = ConfusionCounts {
            true_pos: n_pos - pos_below,
            false_neg: pos_below,
            false_pos: n_neg - neg_below,
            true_neg: neg_below,
        };
        let m = classification_metrics(&c).macro_f1;
        let better = match best {
            None => true,
            Some((best_m, best_t)) => {
                m > best_m
                    || (m == best_m
                        && ((t - 0.5).abs() < (best_t - 0.5).abs()
                            || ((t - 0.5).abs() == (best_t - 0.5).abs() && t < best_t)))
            }
        };
        if better {
            best = Some((m, t));
        }
    }
    Ok(best.expect("candidate list is never empty").1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn confusion_hand_examples() {
        let c = confusion(&[1, 1, 0, 0], &[1, 0, 0, 1]).unwrap();
        assert_eq!(
            c,
            ConfusionCounts { true_pos: 1, false_neg: 1, true_neg: 1, false_pos: 1 }
        );
        let perfect = confusion(&[1, 0, 1], &[1, 0, 1]).unwrap();
        assert_eq!(perfect.false_pos, 0);
        assert_eq!(perfect.false_neg, 0);
        let inverted = confusion(&[1, 0, 1], &[0, 1, 0]).unwrap();
        assert_eq!(inverted.true_pos, 0);
        assert_eq!(inverted.true_neg, 0);
    }

    #[test]
    fn confusion_rejects_bad_input() {
        assert!(matches!(confusion(&[1, 0], &[1]), Err(Error::Usage(_))));
        assert!(matches!(confusion(&[], &[]), Err(Error::Usage(_))));
        assert!(matches!(confusion(&[2], &[1]), Err(Error::Usage(_))));
    }

    #[test]
    fn metrics_formula_substitution() {
        let c = ConfusionCounts { true_pos: 2, false_pos: 1, false_neg: 1, true_neg: 6 };
        let m = classification_metrics(&c);
        assert!((m.precision_pos - 2.0 / 3.0).abs() < 1e-12);
        assert!((m.recall_pos - 2.0 / 3.0).abs() < 1e-12);
        assert!((m.f1_pos - 2.0 / 3.0).abs() < 1e-12);
        assert!((m.accuracy - 0.8).abs() < 1e-12);
        assert!((m.macro_f1 - (m.f1_pos + m.f1_neg) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn all_positive_predictions_on_balanced_data() {
        let c = ConfusionCounts { true_pos: 5, false_pos: 5, false_neg: 0, true_neg: 0 };
        let m = classification_metrics(&c);
        assert_eq!(m.recall_pos, 1.0);
        assert_eq!(m.balanced_accuracy, 0.5);
    }

    #[test]
    fn degenerate_ratios_are_zero() {
        let c = ConfusionCounts { true_pos: 0, false_pos: 0, false_neg: 3, true_neg: 7 };
        let m = classification_metrics(&c);
        assert_eq!(m.precision_pos, 0.0);
        assert_eq!(m.f1_pos, 0.0);
        let empty = ConfusionCounts { true_pos: 0, false_pos: 0, false_neg: 0, true_neg: 0 };
        let m0 = classification_metrics(&empty);
        assert_eq!(m0.accuracy, 0.0);
        assert_eq!(m0.macro_f1, 0.0);
    }

    #[test]
    fn auc_four_point_example() {
        let auc = roc_auc(&[0, 0, 1, 1], &[0.1, 0.4, 0.35, 0.8]).unwrap();
        assert!((auc - 0.75).abs() < 1e-12);
    }

    #[test]
    fn auc_perfect_and_tied() {
        let perfect = roc_auc(&[0, 0, 1, 1], &[0.1, 0.2, 0.7, 0.9]).unwrap();
        assert_eq!(perfect, 1.0);
        let tied = roc_auc(&[0, 1, 0, 1], &[0.5, 0.5, 0.5, 0.5]).unwrap();
        assert!((tied - 0.5).abs() < 1e-12);
    }

    #[test]
    fn auc_single_class_is_undefined() {
        assert!(matches!(
            roc_auc(&[1, 1], &[0.2, 0.3]),
            Err(Error::UndefinedMetric(_))
        ));
        assert!(matches!(
            roc_auc(&[0, 0], &[0.2, 0.3]),
            Err(Error::UndefinedMetric(_))
        ));
    }

    /// Exhaustive pairwise counting; the oracle the fast version must match.
    fn auc_pairwise(y: &[u8], s: &[f64]) -> f64 {
        let mut won = 0.0;
        let mut pairs = 0.0;
        for (i, &yi) in y.iter().enumerate() {
            if yi != 1 {
                continue;
            }
            for (j, &yj) in y.iter().enumerate() {
                if yj != 0 {
                    continue;
                }
                pairs += 1.0;
                if s[i] > s[j] {
                    won += 1.0;
                } else if s[i] == s[j] {
                    won += 0.5;
                }
            }
        }
        won / pairs
    }

    #[test]
    fn auc_matches_pairwise_oracle_on_quantized_scores() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
        for trial in 0..200 {
            let n = rng.gen_range(2..50);
            let mut y: Vec<u8> = (0..n).map(|_| u8::from(rng.gen_bool(0.5))).collect();
            y[0] = 1;
            y[1] = 0;
            // Quantized scores force plenty of ties, like vote fractions do.
            let s: Vec<f64> = (0..n).map(|_| rng.gen_range(0..5) as f64 / 4.0).collect();
            let fast = roc_auc(&y, &s).unwrap();
            let slow = auc_pairwise(&y, &s);
            assert!(
                (fast - slow).abs() < 1e-12,
                "trial {trial}: fast={fast} slow={slow}"
            );
        }
    }

    #[test]
    fn threshold_separable_case() {
        let y = [0, 0, 1, 1];
        let s = [0.1, 0.2, 0.8, 0.9];
        let t = select_threshold(&y, &s).unwrap();
        assert_eq!(t, 0.5);
        let m = classification_metrics(&confusion(&y, &apply_threshold(&s, t)).unwrap());
        assert_eq!(m.macro_f1, 1.0);
    }

    #[test]
    fn threshold_all_equal_scores_returns_half() {
        let t = select_threshold(&[0, 1, 0, 1], &[0.7, 0.7, 0.7, 0.7]).unwrap();
        assert_eq!(t, 0.5);
    }

    #[test]
    fn threshold_single_class_is_undefined() {
        assert!(matches!(
            select_threshold(&[1, 1, 1], &[0.1, 0.5, 0.9]),
            Err(Error::UndefinedMetric(_))
        ));
    }

    /// Brute-force scan over the same candidate grid using the public
    /// metric functions end to end.
    fn select_threshold_naive(y: &[u8], s: &[f64]) -> (f64, f64) {
        let mut best_t = f64::NAN;
        let mut best_m = f64::NEG_INFINITY;
        for t in threshold_candidates(s) {
            let m = classification_metrics(&confusion(y, &apply_threshold(s, t)).unwrap()).macro_f1;
            let better = m > best_m
                || (m == best_m
                    && ((t - 0.5).abs() < (best_t - 0.5).abs()
                        || ((t - 0.5).abs() == (best_t - 0.5).abs() && t < best_t)));
            if better {
                best_m = m;
                best_t = t;
            }
        }
        (best_t, best_m)
    }

    #[test]
    fn threshold_eight_point_fixture_matches_naive_scan() {
        // One mislabeled score inside the positive block.
        let y = [0, 0, 0, 1, 0, 1, 1, 1];
        let s = [0.05, 0.2, 0.3, 0.35, 0.6, 0.7, 0.8, 0.95];
        let t = select_threshold(&y, &s).unwrap();
        let (naive_t, naive_m) = select_threshold_naive(&y, &s);
        assert_eq!(t, naive_t);
        let m = classification_metrics(&confusion(&y, &apply_threshold(&s, t)).unwrap());
        assert_eq!(m.macro_f1, naive_m);
    }

    #[test]
    fn threshold_matches_naive_scan_on_random_inputs() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let n = rng.gen_range(2..40);
            let mut y: Vec<u8> = (0..n).map(|_| u8::from(rng.gen_bool(0.4))).collect();
            y[0] = 1;
            if n > 1 {
                y[1] = 0;
            }
            let s: Vec<f64> = (0..n).map(|_| rng.gen_range(0..8) as f64 / 7.0).collect();
            let fast = select_threshold(&y, &s).unwrap();
            let (naive_t, _) = select_threshold_naive(&y, &s);
            assert_eq!(fast, naive_t);
        }
    }

    #[test]
    fn threshold_never_loses_to_half() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        for _ in 0..100 {
            let n = rng.gen_range(4..60);
            let mut y: Vec<u8> = (0..n).map(|_| u8::from(rng.gen_bool(0.5))).collect();
            y[0] = 1;
            y[1] = 0;
            let s: Vec<f64> = (0..n).map(|_| rng.gen()).collect();
            let t = select_threshold(&y, &s).unwrap();
            let at = |thr: f64| {
                classification_metrics(&confusion(&y, &apply_threshold(&s, thr)).unwrap()).macro_f1
            };
            assert!(at(t) >= at(0.5));
        }
    }
}
