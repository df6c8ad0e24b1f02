//! Rebuilding sliding super points from the hot estimators of an RSEA.
//!
//! Both strategies bootstrap from rows 0..=2: every triple of hot columns
//! whose slices `B(1)`, `B(2)` agree on their overlap becomes a candidate
//! tuple. A tuple then grows one row at a time; appending row `i` only needs
//! the newly exposed pair `(B(i-1), B(i))` checked. Complete tuples are
//! finalized: the intersected estimator must still be hot, the address must
//! reassemble, and the address must hash back to the tuple's row-0 column.
//!
//! * [`Strategy::Recursive`] walks the tuple tree depth first and only ever
//!   holds one tuple.
//! * [`Strategy::Leveled`] grows all tuples of a level together using two
//!   candidate buffers that swap read/store roles between levels, with every
//!   level's `Q` combinations split evenly across the workers.

use crate::error::{Error, Result};
use crate::estimator::{check_window, hot_cutoff};
use crate::hashing::overlap_matches;
use crate::load;

use super::{Detection, DetectionReport, HotSet, Rsea};

/// Default hard cap on candidate tuples held by one buffer.
pub const DEFAULT_CANDIDATE_CAP: usize = 1 << 24;

const INITIAL_BUFFER_TUPLES: usize = 1 << 16;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Strategy {
    Recursive,
    #[default]
    Leveled,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ReconstructOptions {
    pub strategy: Strategy,
    pub workers: usize,
    pub candidate_cap: usize,
}

impl Default for ReconstructOptions {
    fn default() -> Self {
        Self {
            strategy: Strategy::Leveled,
            workers: 1,
            candidate_cap: DEFAULT_CANDIDATE_CAP,
        }
    }
}

/// Fixed-width tuples stored back to back.
struct CandidateBuffer {
    width: usize,
    data: Vec<u32>,
}

impl CandidateBuffer {
    fn new() -> Self {
        Self {
            width: 0,
            data: Vec::new(),
        }
    }

    fn len(&self) -> usize {
        self.data.len().checked_div(self.width).unwrap_or(0)
    }

    fn tuple(&self, i: usize) -> &[u32] {
        &self.data[i * self.width..(i + 1) * self.width]
    }

    /// Empties the buffer for tuples of `width` columns.
    fn reset(&mut self, width: usize) {
        self.width = width;
        self.data.clear();
        self.data.reserve(INITIAL_BUFFER_TUPLES * width);
    }
}

#[inline]
fn extends(tuple: &[u32], col: u32, q: u8, delta: u8) -> bool {
    let head = tuple[0];
    overlap_matches(head ^ tuple[tuple.len() - 1], head ^ col, q, delta)
}

fn cap_error(level: usize, count: usize, cap: usize) -> Error {
    Error::CandidateCapExceeded { level, count, cap }
}

impl Rsea {
    /// Runs the configured reconstruction strategy.
    pub fn reconstruct(
        &self,
        k: u32,
        theta: u32,
        opts: &ReconstructOptions,
    ) -> Result<DetectionReport> {
        match opts.strategy {
            Strategy::Recursive => self.reconstruct_recursive(k, theta),
            Strategy::Leveled => {
                self.reconstruct_leveled_capped(k, theta, opts.workers, opts.candidate_cap)
            }
        }
    }

    /// Depth-first reconstruction holding a single candidate tuple.
    pub fn reconstruct_recursive(&self, k: u32, theta: u32) -> Result<DetectionReport> {
        let k16 = check_window(k)?;
        let cutoff = hot_cutoff(self.eta(), theta);
        let hot = self.hot_sets(k, theta)?;
        let mut found = Vec::new();
        if hot.iter().any(|h| h.columns.is_empty()) {
            return Ok(DetectionReport::from_detections(self.slot(), found));
        }
        let (q, delta) = (self.config().q, self.config().delta);
        let mut tuple = Vec::with_capacity(self.config().rows());
        for &c0 in &hot[0].columns {
            for &c1 in &hot[1].columns {
                for &c2 in &hot[2].columns {
                    if !overlap_matches(c0 ^ c1, c0 ^ c2, q, delta) {
                        continue;
                    }
                    tuple.clear();
                    tuple.extend_from_slice(&[c0, c1, c2]);
                    self.grow(&hot, &mut tuple, k16, cutoff, &mut found);
                }
            }
        }
        Ok(DetectionReport::from_detections(self.slot(), found))
    }

    fn grow(
        &self,
        hot: &[HotSet],
        tuple: &mut Vec<u32>,
        k: u16,
        cutoff: usize,
        found: &mut Vec<Detection>,
    ) {
        let row = tuple.len();
        if row == self.config().rows() {
            found.extend(self.finalize_cols(tuple, k, cutoff));
            return;
        }
        let (q, delta) = (self.config().q, self.config().delta);
        for &col in &hot[row].columns {
            if !extends(tuple, col, q, delta) {
                continue;
            }
            tuple.push(col);
            self.grow(hot, tuple, k, cutoff, found);
            tuple.pop();
        }
    }

    /// Level-synchronous reconstruction with the default buffer cap.
    pub fn reconstruct_leveled(
        &self,
        k: u32,
        theta: u32,
        workers: usize,
    ) -> Result<DetectionReport> {
        self.reconstruct_leveled_capped(k, theta, workers, DEFAULT_CANDIDATE_CAP)
    }

    /// Level-synchronous reconstruction; aborts when a level would keep more
    /// than `cap` candidate tuples.
    pub fn reconstruct_leveled_capped(
        &self,
        k: u32,
        theta: u32,
        workers: usize,
        cap: usize,
    ) -> Result<DetectionReport> {
        let k16 = check_window(k)?;
        let cutoff = hot_cutoff(self.eta(), theta);
        let hot = self.hot_sets_parallel(k, theta, workers)?;
        if hot.iter().any(|h| h.columns.is_empty()) {
            return Ok(DetectionReport::from_detections(self.slot(), Vec::new()));
        }
        let (q, delta) = (self.config().q, self.config().delta);
        let rows = self.config().rows();

        let mut read = CandidateBuffer::new();
        let mut store = CandidateBuffer::new();

        // level 2: all |HSE(0)| * |HSE(1)| * |HSE(2)| triples
        let (h0, h1, h2) = (&hot[0].columns, &hot[1].columns, &hot[2].columns);
        let total = h0.len() * h1.len() * h2.len();
        let inner = h1.len() * h2.len();
        let parts = load::run_split(total, workers, |_, range| {
            let mut local = Vec::new();
            for idx in range {
                let (a, b, c) = (
                    h0[idx / inner],
                    h1[(idx / h2.len()) % h1.len()],
                    h2[idx % h2.len()],
                );
                if overlap_matches(a ^ b, a ^ c, q, delta) {
                    local.extend_from_slice(&[a, b, c]);
                    if local.len() / 3 > cap {
                        return Err(cap_error(2, local.len() / 3, cap));
                    }
                }
            }
            Ok(local)
        });
        store.reset(3);
        for part in parts {
            store.data.extend(part?);
        }
        if store.len() > cap {
            return Err(cap_error(2, store.len(), cap));
        }

        // levels 3..r: |RCTB| * |HSE(i)| extensions, buffers swap roles
        for (level, level_hot) in hot.iter().enumerate().take(rows).skip(3) {
            std::mem::swap(&mut read, &mut store);
            let row_hot = &level_hot.columns;
            let total = read.len() * row_hot.len();
            let reader = &read;
            let parts = load::run_split(total, workers, |_, range| {
                let mut local = Vec::new();
                for idx in range {
                    let tuple = reader.tuple(idx / row_hot.len());
                    let col = row_hot[idx % row_hot.len()];
                    if extends(tuple, col, q, delta) {
                        local.extend_from_slice(tuple);
                        local.push(col);
                        if local.len() / (level + 1) > cap {
                            return Err(cap_error(level, local.len() / (level + 1), cap));
                        }
                    }
                }
                Ok(local)
            });
            store.reset(level + 1);
            for part in parts {
                store.data.extend(part?);
            }
            if store.len() > cap {
                return Err(cap_error(level, store.len(), cap));
            }
        }

        // finalize the store buffer, again split across workers
        let complete = &store;
        let found = load::run_split(complete.len(), workers, |_, range| {
            range
                .filter_map(|t| self.finalize_cols(complete.tuple(t), k16, cutoff))
                .collect::<Vec<_>>()
        });
        Ok(DetectionReport::from_detections(
            self.slot(),
            found.into_iter().flatten(),
        ))
    }
}
