//! Exact sliding-window opposite counts.

use std::collections::{HashMap, HashSet, VecDeque};

use crate::error::{Error, Result};
use crate::estimator::WindowConfig;

use super::trace::TraceRecord;

/// Exact opposite counts per slot: for each slot, `(cip, count)` sorted by cip,
/// covering every cip with at least one opposite in the trailing window.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GroundTruth {
    windows: Vec<Vec<(u32, u32)>>,
}

impl GroundTruth {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends the next slot; entries are sorted and zero counts dropped.
    pub fn push_slot(&mut self, mut counts: Vec<(u32, u32)>) {
        counts.retain(|&(_, c)| c > 0);
        counts.sort_unstable();
        self.windows.push(counts);
    }

    pub fn slots(&self) -> u64 {
        self.windows.len() as u64
    }

    pub fn window(&self, slot: u64) -> &[(u32, u32)] {
        usize::try_from(slot)
            .ok()
            .and_then(|s| self.windows.get(s))
            .map_or(&[], Vec::as_slice)
    }

    pub fn count(&self, slot: u64, cip: u32) -> u32 {
        let w = self.window(slot);
        w.binary_search_by_key(&cip, |&(c, _)| c)
            .map_or(0, |i| w[i].1)
    }

    /// Hosts with at least `theta` opposites at `slot`, sorted.
    pub fn supers(&self, slot: u64, theta: u32) -> Vec<u32> {
        self.window(slot)
            .iter()
            .filter(|&&(_, c)| c >= theta)
            .map(|&(cip, _)| cip)
            .collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, &[(u32, u32)])> {
        self.windows
            .iter()
            .enumerate()
            .map(|(s, w)| (s as u64, w.as_slice()))
    }
}

fn pair_key(cip: u32, oip: u32) -> u64 {
    (u64::from(cip) << 32) | u64::from(oip)
}

/// Streaming exact counter: per-slot distinct pair sets combined by a
/// trailing-window union kept as pair multiplicities.
pub struct ExactCounter {
    window: WindowConfig,
    current: u64,
    seen: bool,
    pending: HashSet<u64>,
    history: VecDeque<Vec<u64>>,
    multiplicity: HashMap<u64, u32>,
    per_cip: HashMap<u32, u32>,
    truth: GroundTruth,
}

impl ExactCounter {
    pub fn new(window: WindowConfig) -> Self {
        Self {
            window,
            current: 0,
            seen: false,
            pending: HashSet::new(),
            history: VecDeque::new(),
            multiplicity: HashMap::new(),
            per_cip: HashMap::new(),
            truth: GroundTruth::new(),
        }
    }

    pub fn push(&mut self, rec: TraceRecord) -> Result<()> {
        let slot = self.window.slot_of(rec.ts)?;
        if slot < self.current {
            return Err(Error::SlotMisalignment(format!(
                "record at ts {} maps to slot {slot}, already closed (current {})",
                rec.ts, self.current
            )));
        }
        while self.current < slot {
            self.close_slot();
        }
        self.seen = true;
        self.pending.insert(pair_key(rec.cip, rec.oip));
        Ok(())
    }

    fn close_slot(&mut self) {
        let distinct: Vec<u64> = self.pending.drain().collect();
        for &key in &distinct {
            let m = self.multiplicity.entry(key).or_insert(0);
            *m += 1;
            if *m == 1 {
                *self.per_cip.entry((key >> 32) as u32).or_insert(0) += 1;
            }
        }
        self.history.push_back(distinct);
        self.truth
            .push_slot(self.per_cip.iter().map(|(&c, &n)| (c, n)).collect());
        if self.history.len() as u64 == u64::from(self.window.k) {
            let expired = self.history.pop_front().expect("non-empty history");
            for key in expired {
                let m = self.multiplicity.get_mut(&key).expect("tracked pair");
                *m -= 1;
                if *m == 0 {
                    self.multiplicity.remove(&key);
                    let cip = (key >> 32) as u32;
                    let n = self.per_cip.get_mut(&cip).expect("tracked cip");
                    *n -= 1;
                    if *n == 0 {
                        self.per_cip.remove(&cip);
                    }
                }
            }
        }
        self.current += 1;
    }

    /// Closes the last open slot and pads to at least `min_slots` slots.
    pub fn finish(mut self, min_slots: u64) -> GroundTruth {
        let target = if self.seen {
            min_slots.max(self.current + 1)
        } else {
            min_slots
        };
        while self.truth.slots() < target {
            self.close_slot();
        }
        self.truth
    }
}

/// Exact counts for a whole trace.
pub fn exact_counts<I>(records: I, window: &WindowConfig, min_slots: u64) -> Result<GroundTruth>
where
    I: IntoIterator<Item = Result<TraceRecord>>,
{
    let mut counter = ExactCounter::new(*window);
    for rec in records {
        counter.push(rec?)?;
    }
    Ok(counter.finish(min_slots))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::BTreeMap;

    fn ok(recs: &[TraceRecord]) -> impl Iterator<Item = Result<TraceRecord>> + '_ {
        recs.iter().copied().map(Ok)
    }

    fn brute_force(recs: &[TraceRecord], w: &WindowConfig, slots: u64) -> GroundTruth {
        let mut truth = GroundTruth::new();
        for s in 0..slots {
            let first = w.window_first(s);
            let mut sets: BTreeMap<u32, HashSet<u32>> = BTreeMap::new();
            for r in recs {
                let rs = w.slot_of(r.ts).unwrap();
                if (first..=s).contains(&rs) {
                    sets.entry(r.cip).or_default().insert(r.oip);
                }
            }
            truth.push_slot(sets.into_iter().map(|(c, o)| (c, o.len() as u32)).collect());
        }
        truth
    }

    #[test]
    fn repeated_pairs_count_once() {
        let w = WindowConfig::new(1, 3, 0).unwrap();
        let recs = [
            TraceRecord::new(0, 7, 1),
            TraceRecord::new(0, 7, 1),
            TraceRecord::new(0, 7, 2),
            TraceRecord::new(0, 7, 1),
        ];
        let truth = exact_counts(ok(&recs), &w, 0).unwrap();
        assert_eq!(truth.slots(), 1);
        assert_eq!(truth.count(0, 7), 2);
    }

    #[test]
    fn window_slides_and_pads() {
        let w = WindowConfig::new(10, 2, 100).unwrap();
        let recs = [
            TraceRecord::new(100, 1, 1),
            TraceRecord::new(115, 1, 2),
            TraceRecord::new(125, 1, 2),
        ];
        let truth = exact_counts(ok(&recs), &w, 5).unwrap();
        let counts: Vec<u32> = (0..5).map(|s| truth.count(s, 1)).collect();
        assert_eq!(counts, vec![1, 2, 1, 1, 0]);
        assert!(truth.window(4).is_empty());
        assert!(exact_counts(ok(&[TraceRecord::new(99, 1, 1)]), &w, 0).is_err());
    }

    #[test]
    fn supers_threshold_inclusive() {
        let mut truth = GroundTruth::new();
        truth.push_slot(vec![(5, 10), (3, 9), (4, 0)]);
        assert_eq!(truth.window(0), &[(3, 9), (5, 10)]);
        assert_eq!(truth.supers(0, 10), vec![5]);
        assert_eq!(truth.supers(0, 9), vec![3, 5]);
        assert!(truth.supers(1, 1).is_empty());
    }

    fn small_trace() -> impl Strategy<Value = Vec<TraceRecord>> {
        proptest::collection::vec((0u32..40, 0u32..6, 0u32..12), 0..300).prop_map(|mut v| {
            v.sort_by_key(|r| r.0);
            v.into_iter()
                .map(|(t, c, o)| TraceRecord::new(t, c, o))
                .collect()
        })
    }

    proptest! {
        #[test]
        fn matches_brute_force(recs in small_trace(), k in 1u32..8, mu in 1u32..5) {
            let w = WindowConfig::new(mu, k, 0).unwrap();
            let truth = exact_counts(ok(&recs), &w, 0).unwrap();
            prop_assert_eq!(&truth, &brute_force(&recs, &w, truth.slots()));
        }

        #[test]
        fn permutation_within_slot_invariant(recs in small_trace(), seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let w = WindowConfig::new(5, 3, 0).unwrap();
            let mut shuffled = recs.clone();
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            for chunk in shuffled.chunk_by_mut(|a, b| a.ts / 5 == b.ts / 5) {
                chunk.shuffle(&mut rng);
            }
            // shuffled timestamps may now regress inside a slot, which the counter accepts
            prop_assert_eq!(
                exact_counts(ok(&recs), &w, 0).unwrap(),
                exact_counts(ok(&shuffled), &w, 0).unwrap()
            );
        }

        #[test]
        fn unit_window_is_per_slot_distinct(recs in small_trace()) {
            let w = WindowConfig::new(4, 1, 0).unwrap();
            let truth = exact_counts(ok(&recs), &w, 0).unwrap();
            for (s, window) in truth.iter() {
                for &(cip, n) in window {
                    let distinct: HashSet<u32> = recs
                        .iter()
                        .filter(|r| u64::from(r.ts / 4) == s && r.cip == cip)
                        .map(|r| r.oip)
                        .collect();
                    prop_assert_eq!(n as usize, distinct.len());
                }
            }
        }
    }
}
