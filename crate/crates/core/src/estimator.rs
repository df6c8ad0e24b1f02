//! The sliding estimator.
//!
//! A linear-counting bit array remembers *whether* a bucket was hit; the
//! sliding estimator remembers *how many slots ago* it was last hit, in a
//! 16-bit distance recorder. Touching a bucket stores 0, every slot boundary
//! adds 1 (saturating at 65535, which doubles as "never seen"), and the
//! number of recorders below `k` plays the role of the set-bit count for the
//! trailing `k`-slot window.
//!
//! The per-slot cycle used throughout the crate is scan, then count/detect,
//! then advance.

use crate::error::{Error, Result};
use crate::hashing::MAX_WINDOW;

/// Recorder value meaning "not touched within the horizon".
pub const NEVER: u16 = u16::MAX;

pub(crate) fn check_window(k: u32) -> Result<u16> {
    if (1..=MAX_WINDOW).contains(&k) {
        Ok(k as u16)
    } else {
        Err(Error::WindowOutOfRange(k))
    }
}

#[inline]
pub(crate) fn count_active(recorders: &[u16], k: u16) -> usize {
    recorders.iter().map(|&v| usize::from(v < k)).sum()
}

#[inline]
pub(crate) fn advance_slice(recorders: &mut [u16]) {
    for v in recorders {
        *v = v.saturating_add(1);
    }
}

/// Array of `eta` distance recorders.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SlidingEstimator {
    recorders: Vec<u16>,
}

impl SlidingEstimator {
    /// A fresh estimator with every recorder at the sentinel.
    pub fn new(eta: usize) -> Result<Self> {
        if eta < 2 {
            return Err(Error::InvalidConfig(vec![format!(
                "eta must be at least 2 (eta={eta})"
            )]));
        }
        Ok(Self {
            recorders: vec![NEVER; eta],
        })
    }

    pub fn from_recorders(recorders: Vec<u16>) -> Result<Self> {
        if recorders.len() < 2 {
            return Err(Error::InvalidConfig(vec![format!(
                "eta must be at least 2 (eta={})",
                recorders.len()
            )]));
        }
        Ok(Self { recorders })
    }

    pub fn eta(&self) -> usize {
        self.recorders.len()
    }

    pub fn recorders(&self) -> &[u16] {
        &self.recorders
    }

    /// Marks `bucket` as seen in the current slot.
    pub fn touch(&mut self, bucket: usize) -> Result<()> {
        let eta = self.eta();
        let slot = self
            .recorders
            .get_mut(bucket)
            .ok_or(Error::BucketOutOfRange { bucket, eta })?;
        *slot = 0;
        Ok(())
    }

    /// Moves to the next slot.
    pub fn advance(&mut self) {
        advance_slice(&mut self.recorders);
    }

    /// `R_k`: recorders touched within the last `k` slots.
    pub fn active_count(&self, k: u32) -> Result<usize> {
        Ok(count_active(&self.recorders, check_window(k)?))
    }

    /// Estimated distinct opposites over the trailing `k` slots.
    pub fn estimate(&self, k: u32) -> Result<f64> {
        Ok(estimate(self.eta(), self.active_count(k)?))
    }

    fn combine<'a, I, F>(estimators: I, pick: F) -> Result<Self>
    where
        I: IntoIterator<Item = &'a SlidingEstimator>,
        F: Fn(u16, u16) -> u16,
    {
        let mut iter = estimators.into_iter();
        let mut out = iter.next().ok_or(Error::EmptyCombination)?.clone();
        for other in iter {
            if other.eta() != out.eta() {
                return Err(Error::EtaMismatch {
                    expected: out.eta(),
                    found: other.eta(),
                });
            }
            for (dst, &src) in out.recorders.iter_mut().zip(&other.recorders) {
                *dst = pick(*dst, src);
            }
        }
        Ok(out)
    }

    /// Element-wise minimum: the union of the observed streams.
    pub fn merge_min<'a, I>(estimators: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a SlidingEstimator>,
    {
        Self::combine(estimators, u16::min)
    }

    /// Element-wise maximum: approximates traffic common to every input.
    pub fn intersect_max<'a, I>(estimators: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a SlidingEstimator>,
    {
        Self::combine(estimators, u16::max)
    }
}

/// Linear-counting estimate from `r_k` active recorders out of `eta`.
///
/// With no recorder left idle the log is undefined; the estimate saturates at
/// `eta * ln(eta)`, the value for a single idle recorder.
pub fn estimate(eta: usize, r_k: usize) -> f64 {
    debug_assert!(r_k <= eta);
    let eta_f = eta as f64;
    let idle = eta.saturating_sub(r_k);
    if idle == 0 {
        return eta_f * eta_f.ln();
    }
    -eta_f * (idle as f64 / eta_f).ln()
}

/// Integer hot threshold: an estimator is hot iff `R_k >= hot_cutoff`.
pub fn hot_cutoff(eta: usize, theta: u32) -> usize {
    let eta_f = eta as f64;
    let exact = eta_f * (1.0 - (-f64::from(theta) / eta_f).exp());
    (exact.ceil() as usize).max(1)
}

/// Slot timing for a sliding window of `k` slots.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WindowConfig {
    /// Slot duration in seconds.
    pub mu: u32,
    /// Window length in slots.
    pub k: u32,
    /// Epoch seconds at which slot 0 begins.
    pub start: u32,
}

impl WindowConfig {
    pub fn new(mu: u32, k: u32, start: u32) -> Result<Self> {
        let mut problems = Vec::new();
        if mu == 0 {
            problems.push("mu must be positive".to_string());
        }
        if check_window(k).is_err() {
            problems.push(format!("k must be in 1..={MAX_WINDOW} (k={k})"));
        }
        if !problems.is_empty() {
            return Err(Error::InvalidConfig(problems));
        }
        Ok(Self { mu, k, start })
    }

    /// `floor((ts - start) / mu)`.
    pub fn slot_of(&self, ts: u32) -> Result<u64> {
        if ts < self.start {
            return Err(Error::BeforeStart {
                ts,
                start: self.start,
            });
        }
        Ok(u64::from((ts - self.start) / self.mu))
    }

    /// First slot of the window ending at `slot`.
    pub fn window_first(&self, slot: u64) -> u64 {
        slot.saturating_sub(u64::from(self.k) - 1)
    }
}

/// Threshold `theta` together with its precomputed hot cutoff.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DetectorParams {
    pub theta: u32,
    pub hot_cutoff: usize,
}

impl DetectorParams {
    pub fn new(eta: usize, theta: u32) -> Self {
        Self {
            theta,
            hot_cutoff: hot_cutoff(eta, theta),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::BTreeSet;

    fn est(values: &[u16]) -> SlidingEstimator {
        SlidingEstimator::from_recorders(values.to_vec()).unwrap()
    }

    #[test]
    fn fresh_estimator() {
        let se = SlidingEstimator::new(4).unwrap();
        assert_eq!(se.recorders(), &[65535, 65535, 65535, 65535]);
        for k in [1, 30, 300, 65534] {
            assert_eq!(se.active_count(k).unwrap(), 0);
        }
        assert_eq!(se.estimate(300).unwrap(), 0.0);
        assert!(SlidingEstimator::new(1).is_err());
    }

    #[test]
    fn touch_behaviour() {
        let mut se = SlidingEstimator::new(8).unwrap();
        se.touch(3).unwrap();
        let once = se.clone();
        se.touch(3).unwrap();
        assert_eq!(se, once);
        assert!(se
            .recorders()
            .iter()
            .enumerate()
            .all(|(j, &v)| v == if j == 3 { 0 } else { NEVER }));
        for _ in 0..5 {
            se.advance();
        }
        assert_eq!(se.recorders()[3], 5);
        assert!(matches!(
            se.touch(8),
            Err(Error::BucketOutOfRange { bucket: 8, eta: 8 })
        ));
    }

    #[test]
    fn advance_saturates() {
        let mut se = est(&[65535, 0, 65534]);
        se.advance();
        assert_eq!(se.recorders(), &[65535, 1, 65535]);
        se.advance();
        assert_eq!(se.recorders(), &[65535, 2, 65535]);
    }

    #[test]
    fn active_count_by_definition() {
        let se = est(&[0, 5, 300, 65535]);
        assert_eq!(se.active_count(300).unwrap(), 2);
        assert_eq!(se.active_count(301).unwrap(), 3);
        assert!(matches!(
            se.active_count(0),
            Err(Error::WindowOutOfRange(0))
        ));
        assert!(se.active_count(65535).is_err());
    }

    #[test]
    fn estimate_values() {
        assert_eq!(estimate(2048, 0), 0.0);
        let oracle = -2048.0 * (1242.0f64 / 2048.0).ln();
        assert!((estimate(2048, 806) - oracle).abs() < 1e-9);
        assert!((estimate(2048, 806) - 1024.0).abs() < 1.0);
        let saturated = 2048.0 * 2048f64.ln();
        assert_eq!(estimate(2048, 2048), saturated);
        assert!((saturated - 15614.6).abs() < 1.0);
        assert_eq!(estimate(2048, 2048), estimate(2048, 2047));
    }

    #[test]
    fn hot_cutoff_values() {
        assert_eq!(hot_cutoff(2048, 1024), 806);
        assert_eq!(hot_cutoff(2048, 1), 1);
        assert_eq!(hot_cutoff(256, 128), 101);
        let mut prev = 0;
        for theta in 1..5000 {
            let c = hot_cutoff(2048, theta);
            assert!(c >= prev);
            prev = c;
        }
    }

    #[test]
    fn combination_examples() {
        let a = est(&[3, 65535]);
        let b = est(&[5, 2]);
        assert_eq!(SlidingEstimator::merge_min([&a, &b]).unwrap(), est(&[3, 2]));
        assert_eq!(
            SlidingEstimator::intersect_max([&a, &b]).unwrap(),
            est(&[5, 65535])
        );
        assert_eq!(SlidingEstimator::merge_min([&a]).unwrap(), a);
        assert_eq!(SlidingEstimator::intersect_max([&a]).unwrap(), a);
        assert!(matches!(
            SlidingEstimator::merge_min(std::iter::empty()),
            Err(Error::EmptyCombination)
        ));
        let c = est(&[1, 2, 3]);
        assert!(matches!(
            SlidingEstimator::intersect_max([&a, &c]),
            Err(Error::EtaMismatch {
                expected: 2,
                found: 3
            })
        ));
    }

    #[test]
    fn window_slots() {
        let w = WindowConfig::new(300, 5, 1000).unwrap();
        assert_eq!(w.slot_of(1000).unwrap(), 0);
        assert_eq!(w.slot_of(1299).unwrap(), 0);
        assert_eq!(w.slot_of(1300).unwrap(), 1);
        assert!(matches!(w.slot_of(999), Err(Error::BeforeStart { .. })));
        assert_eq!(w.window_first(2), 0);
        assert_eq!(w.window_first(10), 6);
        assert!(WindowConfig::new(0, 0, 0).is_err());
    }

    fn estimator_strategy(eta: usize) -> impl Strategy<Value = SlidingEstimator> {
        proptest::collection::vec(prop_oneof![Just(NEVER), 0u16..40, any::<u16>()], eta)
            .prop_map(|v| SlidingEstimator::from_recorders(v).unwrap())
    }

    proptest! {
        // Replays per-slot touch sets and checks the recorders reproduce the
        // set of buckets touched in the last min(k, T+1) slots.
        #[test]
        fn sliding_window_exactness(
            slots in proptest::collection::vec(
                proptest::collection::vec(0usize..32, 0..12), 1..40),
            k in 1u32..45,
        ) {
            let mut se = SlidingEstimator::new(32).unwrap();
            for (t, touches) in slots.iter().enumerate() {
                if t > 0 {
                    se.advance();
                }
                for &b in touches {
                    se.touch(b).unwrap();
                }
            }
            let last = slots.len();
            let first = last.saturating_sub(k as usize);
            let expected: BTreeSet<usize> = slots[first..].iter().flatten().copied().collect();
            let actual: BTreeSet<usize> = se
                .recorders()
                .iter()
                .enumerate()
                .filter(|&(_, &v)| u32::from(v) < k)
                .map(|(j, _)| j)
                .collect();
            prop_assert_eq!(actual, expected);
        }

        #[test]
        fn touches_within_slot_commute(
            mut touches in proptest::collection::vec(0usize..16, 0..30),
            seed_state in estimator_strategy(16),
        ) {
            let mut a = seed_state.clone();
            for &b in &touches { a.touch(b).unwrap(); }
            touches.reverse();
            touches.extend_from_slice(&touches.clone());
            let mut b = seed_state;
            for &t in &touches { b.touch(t).unwrap(); }
            prop_assert_eq!(a, b);
        }

        #[test]
        fn advance_commutes_with_merge_min(
            a in estimator_strategy(16),
            b in estimator_strategy(16),
        ) {
            let mut merged = SlidingEstimator::merge_min([&a, &b]).unwrap();
            merged.advance();
            let (mut a2, mut b2) = (a, b);
            a2.advance();
            b2.advance();
            prop_assert_eq!(merged, SlidingEstimator::merge_min([&a2, &b2]).unwrap());
        }

        #[test]
        fn combinations_are_semilattices(
            a in estimator_strategy(8),
            b in estimator_strategy(8),
            c in estimator_strategy(8),
        ) {
            let ops: [fn(&SlidingEstimator, &SlidingEstimator) -> SlidingEstimator; 2] = [
                |x, y| SlidingEstimator::merge_min([x, y]).unwrap(),
                |x, y| SlidingEstimator::intersect_max([x, y]).unwrap(),
            ];
            for op in ops {
                let ab = op(&a, &b);
                prop_assert_eq!(&ab, &op(&b, &a));
                prop_assert_eq!(op(&ab, &c), op(&a, &op(&b, &c)));
                prop_assert_eq!(op(&a, &a), a.clone());
            }
        }

        #[test]
        fn intersect_never_raises_active_count(
            a in estimator_strategy(16),
            b in estimator_strategy(16),
            k in 1u32..100,
        ) {
            let joined = SlidingEstimator::intersect_max([&a, &b]).unwrap();
            let floor = a.active_count(k).unwrap().min(b.active_count(k).unwrap());
            prop_assert!(joined.active_count(k).unwrap() <= floor);
        }

        #[test]
        fn active_count_monotone_in_k(a in estimator_strategy(32), k in 1u32..65534) {
            prop_assert!(a.active_count(k).unwrap() <= a.active_count(k + 1).unwrap());
        }

        // Linear counting on a bit array holding only the last k slots' touches.
        #[test]
        fn estimate_matches_linear_counting(
            slots in proptest::collection::vec(
                proptest::collection::vec(0usize..64, 0..20), 1..20),
            k in 1u32..20,
        ) {
            let mut se = SlidingEstimator::new(64).unwrap();
            for (t, touches) in slots.iter().enumerate() {
                if t > 0 { se.advance(); }
                for &b in touches { se.touch(b).unwrap(); }
            }
            let mut bits = [false; 64];
            let first = slots.len().saturating_sub(k as usize);
            for &b in slots[first..].iter().flatten() { bits[b] = true; }
            let zeros = bits.iter().filter(|&&x| !x).count();
            let linear = if zeros == 0 { 64.0 * 64f64.ln() } else { -64.0 * (zeros as f64 / 64.0).ln() };
            prop_assert!((se.estimate(k).unwrap() - linear).abs() < 1e-9);
        }
    }
}
