use std::io;

use thiserror::Error;

/// Errors produced by the detector, its sketches and its file formats.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {}", .0.join("; "))]
    InvalidConfig(Vec<String>),

    #[error("bucket {bucket} out of range for {eta} recorders")]
    BucketOutOfRange { bucket: usize, eta: usize },

    #[error("row {row} out of range for {rows} rows")]
    RowOutOfRange { row: usize, rows: usize },

    #[error("window length {0} outside 1..=65534")]
    WindowOutOfRange(u32),

    #[error("recorder count mismatch: expected {expected}, found {found}")]
    EtaMismatch { expected: usize, found: usize },

    #[error("combination needs at least one estimator")]
    EmptyCombination,

    #[error("blocks B({lo}) and B({hi}) are not adjacent")]
    NonAdjacentBlocks { lo: usize, hi: usize },

    #[error("blocks B({index}) and B({}) disagree on their overlapping bits", .index + 1)]
    InconsistentBlocks { index: usize },

    #[error("reassembled address has bits set above bit 31")]
    AddressOverflow,

    #[error("candidate buffer cap exceeded at level {level}: {count} tuples > cap {cap}")]
    CandidateCapExceeded {
        level: usize,
        count: usize,
        cap: usize,
    },

    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: [u8; 4], found: [u8; 4] },

    #[error("unsupported format version {found} (expected {expected})")]
    UnsupportedVersion { expected: u32, found: u32 },

    #[error("truncated payload: expected {expected} bytes, found {actual}")]
    Truncated { expected: u64, actual: u64 },

    #[error("incompatible snapshots: {0}")]
    Incompatible(String),

    #[error("malformed record at {position}: {reason}")]
    MalformedRecord { position: u64, reason: String },

    #[error("timestamp regression at record {position}: {ts} after {prev}")]
    TimestampRegression { position: u64, prev: u32, ts: u32 },

    #[error("timestamp {ts} precedes window start {start}")]
    BeforeStart { ts: u32, start: u32 },

    #[error("infeasible workload: {0}")]
    Infeasible(String),

    #[error("slot misalignment: {0}")]
    SlotMisalignment(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
