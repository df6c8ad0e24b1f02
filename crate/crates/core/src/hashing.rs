//! Opposite-host hashing and the reversible hash function group.
//!
//! Row 0 of the group is a seeded random hash of the inside host into
//! `[0, 2^q)`. Every later row `i` XORs a `q`-bit slice of the address, taken
//! at bit offset `(i - 1) * delta`, into the row-0 value:
//!
//! ```text
//! col(0, cip) = H0(cip) mod 2^q
//! col(i, cip) = ((cip >> ((i - 1) * delta)) XOR H0(cip)) mod 2^q      1 <= i < r
//! ```
//!
//! XORing a row-`i` column with the row-0 column gives the slice `B(i)` back.
//! Adjacent slices overlap in `q - delta` bits, which is what lets the
//! reconstruction prune impossible column combinations early, and together
//! they cover all 32 address bits when `(r - 2) * delta + q >= 32`.
//!
//! Both `H0` and the opposite-host hash `H1` are simple tabulation hashes
//! (one 256-entry table per address byte) whose tables are expanded from a
//! single 64-bit seed. Nodes configured with the same seed hash identically,
//! which distributed merging relies on.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// IPv4 only.
pub const ADDRESS_BITS: u32 = 32;

/// Largest supported window length; 65535 is the "never seen" sentinel.
pub const MAX_WINDOW: u32 = 65534;

/// Shape and seed of the reversible hash function group.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RhfgConfig {
    /// Column index width; the grid has `2^q` columns.
    pub q: u8,
    /// Number of rows (hash functions).
    pub r: u8,
    /// Stride between consecutive address slices, in bits.
    pub delta: u8,
    /// Expands deterministically into every hash table.
    pub seed: u64,
}

impl RhfgConfig {
    pub fn new(q: u8, r: u8, delta: u8, seed: u64) -> Self {
        Self { q, r, delta, seed }
    }

    pub fn rows(&self) -> usize {
        self.r as usize
    }

    pub fn columns(&self) -> usize {
        1usize << self.q
    }

    pub fn column_mask(&self) -> u32 {
        ((1u64 << self.q) - 1) as u32
    }

    /// Bit offset of slice `B(i)` inside the address, for `i >= 1`.
    pub fn block_offset(&self, i: usize) -> u32 {
        (i as u32 - 1) * u32::from(self.delta)
    }

    /// Highest address bit (exclusive) reached by the last slice.
    pub fn coverage(&self) -> u32 {
        (u32::from(self.r).saturating_sub(2)) * u32::from(self.delta) + u32::from(self.q)
    }

    fn violations(&self, out: &mut Vec<String>) {
        if self.delta == 0 || self.delta >= self.q {
            out.push(format!(
                "delta must satisfy 0 < delta < q (delta={}, q={})",
                self.delta, self.q
            ));
        }
        if self.q == 0 || self.q > 16 {
            out.push(format!("q must be in 1..=16 (q={})", self.q));
        }
        if self.r < 3 {
            out.push(format!("r must be at least 3 (r={})", self.r));
        }
        if self.coverage() < ADDRESS_BITS {
            out.push(format!(
                "coverage (r-2)*delta+q = {}*{}+{} = {} < {}",
                self.r.saturating_sub(2),
                self.delta,
                self.q,
                self.coverage(),
                ADDRESS_BITS
            ));
        }
    }

    /// Checks the group's own invariants.
    pub fn check(&self) -> Result<()> {
        let mut problems = Vec::new();
        self.violations(&mut problems);
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(problems))
        }
    }
}

/// Validates a full detector configuration, naming every violated constraint.
pub fn validate_config(cfg: &RhfgConfig, eta: usize, k: u32, theta: u32) -> Result<()> {
    let mut problems = Vec::new();
    cfg.violations(&mut problems);
    if !(1..=MAX_WINDOW).contains(&k) {
        problems.push(format!("k must be in 1..={MAX_WINDOW} (k={k})"));
    }
    if eta < 2 {
        problems.push(format!("eta must be at least 2 (eta={eta})"));
    }
    if theta < 1 {
        problems.push(format!("theta must be at least 1 (theta={theta})"));
    }
    if problems.is_empty() {
        Ok(())
    } else {
        Err(Error::InvalidConfig(problems))
    }
}

/// Simple tabulation hash over the four bytes of an address.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TabulationHash {
    tables: Box<[[u32; 256]; 4]>,
}

impl TabulationHash {
    fn from_rng(rng: &mut ChaCha8Rng) -> Self {
        let mut tables = Box::new([[0u32; 256]; 4]);
        for table in tables.iter_mut() {
            for slot in table.iter_mut() {
                *slot = rng.random();
            }
        }
        Self { tables }
    }

    #[inline]
    pub fn hash(&self, x: u32) -> u32 {
        let [b0, b1, b2, b3] = x.to_le_bytes();
        self.tables[0][b0 as usize]
            ^ self.tables[1][b1 as usize]
            ^ self.tables[2][b2 as usize]
            ^ self.tables[3][b3 as usize]
    }
}

/// Hash tables shared by every node that uses the same seed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HashSeeds {
    seed: u64,
    opposite: TabulationHash,
    inside: TabulationHash,
}

impl HashSeeds {
    pub fn new(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(1);
        let opposite = TabulationHash::from_rng(&mut rng);
        rng.set_stream(2);
        rng.set_word_pos(0);
        let inside = TabulationHash::from_rng(&mut rng);
        Self {
            seed,
            opposite,
            inside,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// `H1`: the recorder index an opposite host maps to, in `[0, eta)`.
    #[inline]
    pub fn hash_opposite(&self, oip: u32, eta: usize) -> usize {
        debug_assert!(eta >= 1);
        // multiply-shift range reduction keeps non power-of-two eta uniform
        ((u64::from(self.opposite.hash(oip)) * eta as u64) >> 32) as usize
    }

    /// Full 32-bit row-0 hash of an inside host before column masking.
    #[inline]
    pub fn hash_inside(&self, cip: u32) -> u32 {
        self.inside.hash(cip)
    }
}

/// A `q`-bit address slice `B(i)` recovered from two column indices.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BitBlock {
    pub index: usize,
    pub value: u32,
}

/// XORs a row-`i` column against the row-0 column.
#[inline]
pub fn recover_block(col0: u32, coli: u32, i: usize) -> BitBlock {
    debug_assert!(i >= 1);
    BitBlock {
        index: i,
        value: col0 ^ coli,
    }
}

#[inline]
pub(crate) fn slice_at(cip: u32, offset: u32, mask: u32) -> u32 {
    (u64::from(cip).checked_shr(offset).unwrap_or(0) as u32) & mask
}

/// Top `q - delta` bits of `lo` against the bottom `q - delta` bits of `hi`.
#[inline]
pub(crate) fn overlap_matches(lo: u32, hi: u32, q: u8, delta: u8) -> bool {
    let overlap_mask = (1u32 << (q - delta)) - 1;
    (lo >> delta) == (hi & overlap_mask)
}

/// Whether two adjacent slices agree on the bits they share.
pub fn blocks_consistent(lo: BitBlock, hi: BitBlock, cfg: &RhfgConfig) -> Result<bool> {
    if hi.index != lo.index + 1 {
        return Err(Error::NonAdjacentBlocks {
            lo: lo.index,
            hi: hi.index,
        });
    }
    Ok(overlap_matches(lo.value, hi.value, cfg.q, cfg.delta))
}

/// Rebuilds an address from slices given as `B(1), ..., B(r-1)` values.
pub(crate) fn assemble_values(values: &[u32], cfg: &RhfgConfig) -> Result<u32> {
    let mut acc = 0u64;
    for (pos, &value) in values.iter().enumerate() {
        let index = pos + 1;
        if pos > 0 && !overlap_matches(values[pos - 1], value, cfg.q, cfg.delta) {
            return Err(Error::InconsistentBlocks { index: index - 1 });
        }
        let offset = cfg.block_offset(index);
        if offset >= ADDRESS_BITS {
            if value != 0 {
                return Err(Error::AddressOverflow);
            }
            continue;
        }
        acc |= u64::from(value) << offset;
    }
    // slices reaching past bit 31 must carry zeros there
    if acc >> ADDRESS_BITS != 0 {
        return Err(Error::AddressOverflow);
    }
    Ok(acc as u32)
}

/// Reassembles the address whose slices are `blocks` (ordered `B(1)..B(r-1)`).
pub fn assemble_ip(blocks: &[BitBlock], cfg: &RhfgConfig) -> Result<u32> {
    if blocks.len() != cfg.rows() - 1 {
        return Err(Error::InvalidConfig(vec![format!(
            "expected {} blocks, got {}",
            cfg.rows() - 1,
            blocks.len()
        )]));
    }
    for (pos, block) in blocks.iter().enumerate() {
        if block.index != pos + 1 {
            return Err(Error::NonAdjacentBlocks {
                lo: pos,
                hi: block.index,
            });
        }
    }
    let values: Vec<u32> = blocks.iter().map(|b| b.value).collect();
    assemble_values(&values, cfg)
}

/// The reversible hash function group bound to its tables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rhfg {
    cfg: RhfgConfig,
    seeds: HashSeeds,
}

impl Rhfg {
    pub fn new(cfg: RhfgConfig) -> Result<Self> {
        cfg.check()?;
        Ok(Self {
            seeds: HashSeeds::new(cfg.seed),
            cfg,
        })
    }

    pub fn config(&self) -> &RhfgConfig {
        &self.cfg
    }

    pub fn seeds(&self) -> &HashSeeds {
        &self.seeds
    }

    #[inline]
    pub fn row0(&self, cip: u32) -> u32 {
        self.seeds.hash_inside(cip) & self.cfg.column_mask()
    }

    /// Column of row `i >= 1`, reusing an already computed row-0 column.
    #[inline]
    pub fn column_from_row0(&self, i: usize, cip: u32, col0: u32) -> u32 {
        let offset = self.cfg.block_offset(i);
        slice_at(cip, offset, self.cfg.column_mask()) ^ col0
    }

    /// Column index of `cip` in row `i`.
    pub fn column(&self, i: usize, cip: u32) -> Result<u32> {
        if i >= self.cfg.rows() {
            return Err(Error::RowOutOfRange {
                row: i,
                rows: self.cfg.rows(),
            });
        }
        let col0 = self.row0(cip);
        Ok(if i == 0 {
            col0
        } else {
            self.column_from_row0(i, cip, col0)
        })
    }

    /// All `r` column indices of `cip`.
    pub fn columns(&self, cip: u32) -> Vec<u32> {
        let col0 = self.row0(cip);
        std::iter::once(col0)
            .chain((1..self.cfg.rows()).map(|i| self.column_from_row0(i, cip, col0)))
            .collect()
    }

    /// `H1` with this group's seed.
    #[inline]
    pub fn hash_opposite(&self, oip: u32, eta: usize) -> usize {
        self.seeds.hash_opposite(oip, eta)
    }
}
