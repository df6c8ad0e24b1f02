//! Slot-by-slot detection driver.
//!
//! Each slot is processed as: catch the sketch up to the slot (advancing
//! once per elapsed slot), scan the slot's pairs in batches of `alpha`, then
//! reconstruct. The advance is deferred to the next slot so the sketch left
//! behind after a run is the state at the end of the last slot.

use crate::error::{Error, Result};
use crate::estimator::WindowConfig;
use crate::hashing::{validate_config, RhfgConfig};
use crate::rsea::{DetectionReport, ReconstructOptions, Rsea, Strategy, DEFAULT_CANDIDATE_CAP};
use crate::workload::TraceRecord;

/// Everything a detector needs besides its input.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DetectorConfig {
    pub rhfg: RhfgConfig,
    pub eta: usize,
    pub window: WindowConfig,
    pub theta: u32,
    /// Pairs scanned per batch.
    pub alpha: usize,
    pub workers: usize,
    pub strategy: Strategy,
    pub candidate_cap: usize,
}

impl DetectorConfig {
    /// eta = 2^11, q = 14, r = 5, delta = 6, theta = 1024, alpha = 2^15,
    /// k = 300, mu = 1 s.
    pub fn paper(seed: u64) -> Self {
        Self {
            rhfg: RhfgConfig::new(14, 5, 6, seed),
            eta: 2048,
            window: WindowConfig {
                mu: 1,
                k: 300,
                start: 0,
            },
            theta: 1024,
            alpha: 1 << 15,
            workers: 1,
            strategy: Strategy::Leveled,
            candidate_cap: DEFAULT_CANDIDATE_CAP,
        }
    }

    /// A laptop-sized preset: eta = 256, q = 10, r = 5, delta = 8,
    /// theta = 128, k = 30.
    pub fn desk(seed: u64) -> Self {
        Self {
            rhfg: RhfgConfig::new(10, 5, 8, seed),
            eta: 256,
            theta: 128,
            window: WindowConfig {
                mu: 1,
                k: 30,
                start: 0,
            },
            ..Self::paper(seed)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut problems = match validate_config(&self.rhfg, self.eta, self.window.k, self.theta) {
            Ok(()) => Vec::new(),
            Err(Error::InvalidConfig(p)) => p,
            Err(e) => return Err(e),
        };
        if self.window.mu == 0 {
            problems.push("mu must be positive".into());
        }
        if self.alpha == 0 {
            problems.push("alpha must be positive".into());
        }
        if self.workers == 0 {
            problems.push("workers must be positive".into());
        }
        if self.candidate_cap == 0 {
            problems.push("candidate cap must be positive".into());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(problems))
        }
    }

    pub fn reconstruct_options(&self) -> ReconstructOptions {
        ReconstructOptions {
            strategy: self.strategy,
            workers: self.workers,
            candidate_cap: self.candidate_cap,
        }
    }

    /// Brings `rsea` forward to `slot`.
    pub(crate) fn seek(&self, rsea: &mut Rsea, slot: u64) -> Result<()> {
        if slot < rsea.slot() {
            return Err(Error::SlotMisalignment(format!(
                "slot {slot} is behind the sketch (at slot {})",
                rsea.slot()
            )));
        }
        while rsea.slot() < slot {
            rsea.advance_slot(self.workers);
        }
        Ok(())
    }

    pub(crate) fn scan(&self, rsea: &mut Rsea, pairs: &[(u32, u32)]) {
        for batch in pairs.chunks(self.alpha) {
            rsea.scan_batch(batch, self.workers);
        }
    }

    pub(crate) fn detect(&self, rsea: &Rsea) -> Result<DetectionReport> {
        rsea.reconstruct(self.window.k, self.theta, &self.reconstruct_options())
    }
}

/// A single-node detector.
pub struct Detector {
    cfg: DetectorConfig,
    rsea: Rsea,
}

impl Detector {
    pub fn new(cfg: DetectorConfig) -> Result<Self> {
        cfg.validate()?;
        let rsea = Rsea::new(cfg.rhfg, cfg.eta)?;
        Ok(Self { cfg, rsea })
    }

    /// Resumes from an existing sketch, which must match the configuration.
    pub fn from_rsea(cfg: DetectorConfig, rsea: Rsea) -> Result<Self> {
        cfg.validate()?;
        if rsea.config() != &cfg.rhfg || rsea.eta() != cfg.eta {
            return Err(Error::Incompatible(
                "sketch layout differs from the detector configuration".into(),
            ));
        }
        Ok(Self { cfg, rsea })
    }

    pub fn config(&self) -> &DetectorConfig {
        &self.cfg
    }

    pub fn rsea(&self) -> &Rsea {
        &self.rsea
    }

    pub fn into_rsea(self) -> Rsea {
        self.rsea
    }

    /// Scans one slot's pairs and reports the super points of the window
    /// ending at `slot`.
    pub fn process_slot(&mut self, slot: u64, pairs: &[(u32, u32)]) -> Result<DetectionReport> {
        self.cfg.seek(&mut self.rsea, slot)?;
        self.cfg.scan(&mut self.rsea, pairs);
        self.cfg.detect(&self.rsea)
    }

    /// Runs over a whole record stream, handing each slot's report to `sink`.
    pub fn run<I, F>(&mut self, records: I, min_slots: u64, mut sink: F) -> Result<()>
    where
        I: IntoIterator<Item = Result<TraceRecord>>,
        F: FnMut(&DetectionReport) -> Result<()>,
    {
        for batch in SlotBatches::new(records, self.cfg.window, min_slots) {
            let (slot, pairs) = batch?;
            let report = self.process_slot(slot, &pairs)?;
            sink(&report)?;
        }
        Ok(())
    }
}

/// One slot's index and its `(cip, oip)` pairs.
pub type SlotBatch = (u64, Vec<(u32, u32)>);

/// Groups a time-ordered record stream into per-slot pair batches, yielding
/// every slot from 0 on (empty ones included) until the input ends and at
/// least `min_slots` slots have been produced.
pub struct SlotBatches<I: Iterator> {
    records: I,
    window: WindowConfig,
    next_slot: u64,
    pending: Option<(u64, TraceRecord)>,
    exhausted: bool,
    failed: bool,
    min_slots: u64,
}

impl<I: Iterator<Item = Result<TraceRecord>>> SlotBatches<I> {
    pub fn new<T>(records: T, window: WindowConfig, min_slots: u64) -> Self
    where
        T: IntoIterator<IntoIter = I>,
    {
        Self {
            records: records.into_iter(),
            window,
            next_slot: 0,
            pending: None,
            exhausted: false,
            failed: false,
            min_slots,
        }
    }

    fn pull(&mut self) -> Result<()> {
        match self.records.next() {
            None => self.exhausted = true,
            Some(rec) => {
                let rec = rec?;
                self.pending = Some((self.window.slot_of(rec.ts)?, rec));
            }
        }
        Ok(())
    }

    fn batch(&mut self) -> Result<Option<SlotBatch>> {
        if self.pending.is_none() && !self.exhausted {
            self.pull()?;
        }
        if self.pending.is_none() && self.next_slot >= self.min_slots {
            return Ok(None);
        }
        let slot = self.next_slot;
        let mut pairs = Vec::new();
        while let Some((s, rec)) = self.pending {
            if s < slot {
                return Err(Error::SlotMisalignment(format!(
                    "record at ts {} belongs to slot {s}, already closed",
                    rec.ts
                )));
            }
            if s > slot {
                break;
            }
            pairs.push((rec.cip, rec.oip));
            self.pending = None;
            if !self.exhausted {
                self.pull()?;
            }
        }
        self.next_slot += 1;
        Ok(Some((slot, pairs)))
    }
}

impl<I: Iterator<Item = Result<TraceRecord>>> Iterator for SlotBatches<I> {
    type Item = Result<SlotBatch>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed {
            return None;
        }
        match self.batch() {
            Ok(b) => b.map(Ok),
            Err(e) => {
                self.failed = true;
                Some(Err(e))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn recs(v: &[(u32, u32, u32)]) -> Vec<Result<TraceRecord>> {
        v.iter()
            .map(|&(t, c, o)| Ok(TraceRecord::new(t, c, o)))
            .collect()
    }

    #[test]
    fn batches_fill_gaps_and_pad() {
        let w = WindowConfig::new(10, 3, 100).unwrap();
        let input = recs(&[(100, 1, 1), (109, 1, 2), (131, 2, 2)]);
        let got: Vec<_> = SlotBatches::new(input, w, 6)
            .collect::<Result<_>>()
            .unwrap();
        let expect: Vec<(u64, Vec<(u32, u32)>)> = vec![
            (0, vec![(1, 1), (1, 2)]),
            (1, vec![]),
            (2, vec![]),
            (3, vec![(2, 2)]),
            (4, vec![]),
            (5, vec![]),
        ];
        assert_eq!(got, expect);
        let got: Vec<_> = SlotBatches::new(recs(&[]), w, 0)
            .collect::<Result<_>>()
            .unwrap();
        assert!(got.is_empty());
    }

    #[test]
    fn batches_reject_early_and_regressing_records() {
        let w = WindowConfig::new(10, 3, 100).unwrap();
        let mut it = SlotBatches::new(recs(&[(99, 1, 1)]), w, 0);
        assert!(matches!(it.next(), Some(Err(Error::BeforeStart { .. }))));
        assert!(it.next().is_none());
        let out: Result<Vec<_>> =
            SlotBatches::new(recs(&[(125, 1, 1), (101, 1, 1)]), w, 0).collect();
        assert!(matches!(out, Err(Error::SlotMisalignment(_))));
    }

    #[test]
    fn presets_validate() {
        DetectorConfig::paper(1).validate().unwrap();
        DetectorConfig::desk(1).validate().unwrap();
        let mut bad = DetectorConfig::desk(1);
        bad.alpha = 0;
        bad.workers = 0;
        let Err(Error::InvalidConfig(p)) = bad.validate() else {
            panic!()
        };
        assert_eq!(p.len(), 2);
    }

    #[test]
    fn detector_finds_planted_host_and_forgets_it() {
        let mut cfg = DetectorConfig::desk(7);
        cfg.window.k = 3;
        cfg.alpha = 100;
        let mut det = Detector::new(cfg).unwrap();
        let host = 0xC0A8_0001;
        let mut input = Vec::new();
        for o in 0..400u32 {
            input.push(Ok(TraceRecord::new(0, host, o.wrapping_mul(2_654_435_761))));
        }
        let mut reports = Vec::new();
        det.run(input, 5, |r| {
            reports.push(r.clone());
            Ok(())
        })
        .unwrap();
        let found: Vec<Vec<u32>> = reports.iter().map(|r| r.cips().collect()).collect();
        assert_eq!(
            found,
            vec![vec![host], vec![host], vec![host], vec![], vec![]]
        );
        assert_eq!(det.rsea().slot(), 4);
    }
}
