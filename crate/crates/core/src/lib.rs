//! Sliding super point detection over IP-pair streams.
//!
//! A *sliding super point* is an inside host contacted by at least `theta`
//! distinct outside hosts during the trailing window of `k` slots. This crate
//! finds them with a reversible sliding estimator array ([`rsea::Rsea`]): a
//! grid of 16-bit distance-recorder sketches ([`estimator::SlidingEstimator`])
//! addressed through a reversible hash function group ([`hashing::Rhfg`]) so
//! that host addresses can be rebuilt from the grid alone.
//!
//! Around the core sketch live the distributed merge and snapshot format
//! ([`distributed`]), trace I/O, synthetic workloads, the exact oracle and the
//! accuracy metrics ([`workload`]), and the slot-by-slot driver
//! ([`pipeline`]).

pub mod distributed;
pub mod error;
pub mod estimator;
pub mod hashing;
pub mod load;
pub mod pipeline;
pub mod rsea;
pub mod workload;

pub use error::{Error, Result};
