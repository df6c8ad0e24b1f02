//! The reversible sliding estimator array (RSEA).
//!
//! An `r x 2^q` grid of sliding estimators. Each inside host owns one column
//! per row, chosen by the reversible hash function group, and every IP pair
//! zeroes the same recorder (picked by the opposite-host hash) in all `r` of
//! them. At the end of a slot the hot estimators are collected per row and
//! host addresses are rebuilt from bit-consistent column tuples; see
//! [`reconstruct`] for the two reconstruction strategies.
//!
//! All recorders live in one flat buffer laid out row-major by
//! `(row, column, bucket)`, the same order the snapshot payload uses.
//!
//! Mutation follows a phased contract that the borrow checker enforces:
//! scanning (`update`, `scan_batch`) and `advance_slot` need `&mut self`,
//! reads need `&self`. Inside `scan_batch` the workers share the grid and
//! race only on storing zeros, which is order independent.

pub mod reconstruct;

use std::sync::atomic::{AtomicU16, Ordering};

use crate::error::{Error, Result};
use crate::estimator::{self, advance_slice, check_window, count_active, SlidingEstimator, NEVER};
use crate::hashing::{overlap_matches, Rhfg, RhfgConfig};
use crate::load;

pub use reconstruct::{ReconstructOptions, Strategy, DEFAULT_CANDIDATE_CAP};

/// One hot column per row, in row order.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CandidateTuple {
    cols: Vec<u32>,
}

impl CandidateTuple {
    /// Builds a tuple from a bit-consistent column list (`3 <= len <= r`).
    pub fn new(cols: Vec<u32>, cfg: &RhfgConfig) -> Result<Self> {
        if cols.len() < 3 || cols.len() > cfg.rows() {
            return Err(Error::InvalidConfig(vec![format!(
                "candidate tuple length {} outside 3..={}",
                cols.len(),
                cfg.rows()
            )]));
        }
        for i in 2..cols.len() {
            if !overlap_matches(cols[0] ^ cols[i - 1], cols[0] ^ cols[i], cfg.q, cfg.delta) {
                return Err(Error::InconsistentBlocks { index: i - 1 });
            }
        }
        Ok(Self { cols })
    }

    pub fn cols(&self) -> &[u32] {
        &self.cols
    }

    pub fn len(&self) -> usize {
        self.cols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cols.is_empty()
    }
}

/// Hot columns of one row.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HotSet {
    pub row: usize,
    pub columns: Vec<u32>,
}

/// A reconstructed sliding super point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Detection {
    pub cip: u32,
    /// Opposite-number estimate from the intersected estimator.
    pub estimate: f64,
}

/// Super points found at the end of one slot, sorted by address.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DetectionReport {
    pub slot: u64,
    pub hosts: Vec<Detection>,
}

impl DetectionReport {
    /// Deduplicates by address, keeping the larger estimate.
    pub fn from_detections(slot: u64, found: impl IntoIterator<Item = Detection>) -> Self {
        let mut best = std::collections::BTreeMap::new();
        for d in found {
            best.entry(d.cip)
                .and_modify(|e: &mut f64| *e = e.max(d.estimate))
                .or_insert(d.estimate);
        }
        Self {
            slot,
            hosts: best
                .into_iter()
                .map(|(cip, estimate)| Detection { cip, estimate })
                .collect(),
        }
    }

    pub fn cips(&self) -> impl Iterator<Item = u32> + '_ {
        self.hosts.iter().map(|d| d.cip)
    }
}

/// Reversible sliding estimator array.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rsea {
    rhfg: Rhfg,
    eta: usize,
    slot: u64,
    grid: Vec<u16>,
}

impl Rsea {
    pub fn new(cfg: RhfgConfig, eta: usize) -> Result<Self> {
        let rhfg = Rhfg::new(cfg)?;
        if eta < 2 {
            return Err(Error::InvalidConfig(vec![format!(
                "eta must be at least 2 (eta={eta})"
            )]));
        }
        let len = Self::grid_len(&cfg, eta);
        Ok(Self {
            rhfg,
            eta,
            slot: 0,
            grid: vec![NEVER; len],
        })
    }

    /// Rebuilds an array from a row-major recorder buffer.
    pub fn from_grid(cfg: RhfgConfig, eta: usize, slot: u64, grid: Vec<u16>) -> Result<Self> {
        let rhfg = Rhfg::new(cfg)?;
        let expected = Self::grid_len(&cfg, eta);
        if eta < 2 || grid.len() != expected {
            return Err(Error::Truncated {
                expected: expected as u64 * 2,
                actual: grid.len() as u64 * 2,
            });
        }
        Ok(Self {
            rhfg,
            eta,
            slot,
            grid,
        })
    }

    /// Total recorder count `eta * r * 2^q`.
    pub fn grid_len(cfg: &RhfgConfig, eta: usize) -> usize {
        eta * cfg.rows() * cfg.columns()
    }

    pub fn config(&self) -> &RhfgConfig {
        self.rhfg.config()
    }

    pub fn rhfg(&self) -> &Rhfg {
        &self.rhfg
    }

    pub fn eta(&self) -> usize {
        self.eta
    }

    /// Number of `advance_slot` calls so far.
    pub fn slot(&self) -> u64 {
        self.slot
    }

    pub fn set_slot(&mut self, slot: u64) {
        self.slot = slot;
    }

    pub fn grid(&self) -> &[u16] {
        &self.grid
    }

    pub(crate) fn grid_mut(&mut self) -> &mut [u16] {
        &mut self.grid
    }

    #[inline]
    fn cell_offset(&self, row: usize, col: u32) -> usize {
        cell_offset(self.config().q, self.eta, row, col)
    }

    /// Recorders of estimator `(row, col)`.
    pub fn estimator(&self, row: usize, col: u32) -> &[u16] {
        let start = self.cell_offset(row, col);
        &self.grid[start..start + self.eta]
    }

    pub fn estimator_owned(&self, row: usize, col: u32) -> SlidingEstimator {
        SlidingEstimator::from_recorders(self.estimator(row, col).to_vec())
            .expect("eta >= 2 checked at construction")
    }

    /// Records one IP pair: `r` recorder writes.
    pub fn update(&mut self, cip: u32, oip: u32) {
        let grid = &mut self.grid;
        pair_offsets(&self.rhfg, self.eta, cip, oip, |off| grid[off] = 0);
    }

    /// Records a batch of pairs, split evenly over `workers` threads.
    pub fn scan_batch(&mut self, pairs: &[(u32, u32)], workers: usize) {
        if pairs.is_empty() {
            return;
        }
        if workers <= 1 {
            for &(cip, oip) in pairs {
                self.update(cip, oip);
            }
            return;
        }
        const _: () = assert!(std::mem::align_of::<AtomicU16>() == std::mem::align_of::<u16>());
        let grid: &mut [u16] = &mut self.grid;
        // SAFETY: AtomicU16 has the size and bit validity of u16 and the same
        // alignment (asserted above). The exclusive borrow of the grid is held
        // for the whole atomic view, so no non-atomic access can overlap it.
        let shared: &[AtomicU16] = unsafe { &*(grid as *mut [u16] as *const [AtomicU16]) };
        let (rhfg, eta) = (&self.rhfg, self.eta);
        load::run_split(pairs.len(), workers, |_, range| {
            for &(cip, oip) in &pairs[range] {
                pair_offsets(rhfg, eta, cip, oip, |off| {
                    shared[off].store(0, Ordering::Relaxed)
                });
            }
        });
    }

    /// Moves every recorder one slot forward, split over `workers` threads.
    pub fn advance_slot(&mut self, workers: usize) {
        load::for_each_chunk_mut(&mut self.grid, workers, advance_slice);
        self.slot += 1;
    }

    /// Hot columns of every row at window `k` and threshold `theta`.
    pub fn hot_sets(&self, k: u32, theta: u32) -> Result<Vec<HotSet>> {
        self.hot_sets_parallel(k, theta, 1)
    }

    pub fn hot_sets_parallel(&self, k: u32, theta: u32, workers: usize) -> Result<Vec<HotSet>> {
        let k = check_window(k)?;
        let cutoff = estimator::hot_cutoff(self.eta, theta);
        let cols = self.config().columns();
        let rows = self.config().rows();
        let parts = load::run_split(rows * cols, workers, |_, range| {
            range
                .filter(|&cell| {
                    count_active(&self.grid[cell * self.eta..(cell + 1) * self.eta], k) >= cutoff
                })
                .collect::<Vec<_>>()
        });
        let mut sets: Vec<HotSet> = (0..rows)
            .map(|row| HotSet {
                row,
                columns: Vec::new(),
            })
            .collect();
        for cell in parts.into_iter().flatten() {
            sets[cell / cols].columns.push((cell % cols) as u32);
        }
        Ok(sets)
    }

    /// `R_k` of the element-wise maximum of the tuple's estimators.
    pub(crate) fn intersect_active_count(&self, cols: &[u32], k: u16) -> usize {
        let offsets: Vec<usize> = cols
            .iter()
            .enumerate()
            .map(|(row, &col)| self.cell_offset(row, col))
            .collect();
        (0..self.eta)
            .filter(|&j| {
                offsets
                    .iter()
                    .map(|&off| self.grid[off + j])
                    .max()
                    .unwrap_or(NEVER)
                    < k
            })
            .count()
    }

    /// Checks a complete tuple and, if it is a sliding super point, returns
    /// its address and estimate.
    pub fn finalize_candidate(
        &self,
        ct: &CandidateTuple,
        k: u32,
        theta: u32,
    ) -> Result<Option<Detection>> {
        let k = check_window(k)?;
        let cutoff = estimator::hot_cutoff(self.eta, theta);
        Ok(self.finalize_cols(ct.cols(), k, cutoff))
    }

    pub(crate) fn finalize_cols(&self, cols: &[u32], k: u16, cutoff: usize) -> Option<Detection> {
        debug_assert_eq!(cols.len(), self.config().rows());
        let r_k = self.intersect_active_count(cols, k);
        if r_k < cutoff {
            return None;
        }
        let col0 = cols[0];
        let blocks: Vec<u32> = cols[1..].iter().map(|&c| col0 ^ c).collect();
        let cip = crate::hashing::assemble_values(&blocks, self.config()).ok()?;
        if self.rhfg.row0(cip) != col0 {
            return None;
        }
        Some(Detection {
            cip,
            estimate: estimator::estimate(self.eta, r_k),
        })
    }
}

#[inline]
fn cell_offset(q: u8, eta: usize, row: usize, col: u32) -> usize {
    ((row << q) + col as usize) * eta
}

/// Grid offsets of the `r` recorders an IP pair writes. `H1(oip)` and the
/// row-0 column are computed once and reused for every row.
#[inline]
fn pair_offsets(rhfg: &Rhfg, eta: usize, cip: u32, oip: u32, mut emit: impl FnMut(usize)) {
    let q = rhfg.config().q;
    let bucket = rhfg.hash_opposite(oip, eta);
    let col0 = rhfg.row0(cip);
    emit(cell_offset(q, eta, 0, col0) + bucket);
    for row in 1..rhfg.config().rows() {
        let col = rhfg.column_from_row0(row, cip, col0);
        emit(cell_offset(q, eta, row, col) + bucket);
    }
}
