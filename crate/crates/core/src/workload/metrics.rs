//! Detection accuracy against exact truth.
//!
//! Both rates are normalized by the number of true super points, so FPR can
//! exceed 1 when many normal hosts are flagged.

use std::collections::BTreeSet;

use super::oracle::GroundTruth;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct AccuracyResult {
    pub fpr: f64,
    pub fnr: f64,
    pub tfr: f64,
    pub supers: usize,
    pub reported: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    /// No true super points but something was reported; `fpr` then holds the
    /// raw number of reported hosts.
    pub degenerate: bool,
}

/// Scores one slot's reported set against the true super points.
pub fn evaluate_sets(reported: &BTreeSet<u32>, supers: &BTreeSet<u32>) -> AccuracyResult {
    let false_positives = reported.difference(supers).count();
    let false_negatives = supers.difference(reported).count();
    let mut out = AccuracyResult {
        supers: supers.len(),
        reported: reported.len(),
        false_positives,
        false_negatives,
        ..Default::default()
    };
    if supers.is_empty() {
        if !reported.is_empty() {
            out.fpr = reported.len() as f64;
            out.degenerate = true;
        }
    } else {
        let n = supers.len() as f64;
        out.fpr = false_positives as f64 / n;
        out.fnr = false_negatives as f64 / n;
    }
    out.tfr = out.fpr + out.fnr;
    out
}

pub fn evaluate(reported: &[u32], truth: &GroundTruth, slot: u64, theta: u32) -> AccuracyResult {
    let reported: BTreeSet<u32> = reported.iter().copied().collect();
    let supers: BTreeSet<u32> = truth.supers(slot, theta).into_iter().collect();
    evaluate_sets(&reported, &supers)
}

/// Mean FPR, FNR and TFR over slots.
pub fn mean_rates(results: &[AccuracyResult]) -> (f64, f64, f64) {
    if results.is_empty() {
        return (0.0, 0.0, 0.0);
    }
    let n = results.len() as f64;
    let sum = |f: fn(&AccuracyResult) -> f64| results.iter().map(f).sum::<f64>() / n;
    (sum(|r| r.fpr), sum(|r| r.fnr), sum(|r| r.tfr))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(range: impl IntoIterator<Item = u32>) -> BTreeSet<u32> {
        range.into_iter().collect()
    }

    #[test]
    fn exact_match() {
        let r = evaluate_sets(&set(0..10), &set(0..10));
        assert_eq!((r.fpr, r.fnr, r.tfr), (0.0, 0.0, 0.0));
        assert!(!r.degenerate);
    }

    #[test]
    fn one_extra_and_two_missing() {
        let r = evaluate_sets(&set(0..11), &set(0..10));
        assert!((r.fpr - 0.1).abs() < 1e-12);
        assert_eq!(r.fnr, 0.0);
        let r = evaluate_sets(&set(2..10), &set(0..10));
        assert!((r.fnr - 0.2).abs() < 1e-12);
        let r = evaluate_sets(&set(2..11), &set(0..10));
        assert!((r.tfr - 0.3).abs() < 1e-12);
    }

    #[test]
    fn no_true_supers() {
        let r = evaluate_sets(&set([]), &set([]));
        assert_eq!((r.fpr, r.fnr, r.tfr, r.degenerate), (0.0, 0.0, 0.0, false));
        let r = evaluate_sets(&set([4, 5, 6]), &set([]));
        assert_eq!((r.fpr, r.fnr, r.degenerate), (3.0, 0.0, true));
    }

    #[test]
    fn evaluate_uses_threshold() {
        let mut truth = GroundTruth::new();
        truth.push_slot(vec![(1, 5), (2, 4), (3, 9)]);
        let r = evaluate(&[1, 2], &truth, 0, 5);
        assert_eq!((r.supers, r.false_positives, r.false_negatives), (2, 1, 1));
        assert_eq!(
            mean_rates(&[r, evaluate(&[1, 3], &truth, 0, 5)]),
            (0.25, 0.25, 0.5)
        );
    }
}
