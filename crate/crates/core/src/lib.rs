//! Hallucination detection from the geometry of response embeddings.
//!
//! Responses are represented as keyword embeddings. Within each class
//! (hallucinated, genuine) the full set of pairwise Minkowski distances is
//! computed; the two resulting distance distributions are compared
//! (KL divergence, median difference, rank-sum test) and modelled with 1-D
//! Gaussian kernel density estimates. A new response is classified by
//! summing the log-likelihoods of its distances to each training class under
//! that class's density and picking the larger score.
//!
//! The crate is organised by pipeline stage:
//!
//! * [`store`]: embedding records, the JSONL file format, nested train/test
//!   slices and a synthetic data generator.
//! * [`distance`]: Minkowski distances and intra-class / cross distance sets.
//! * [`stats`]: boxplot summaries, histogram KL divergence, Mann-Whitney U.
//! * [`kde`]: Gaussian KDE with log-sum-exp evaluation.
//! * [`detector`]: scoring, evaluation metrics and full parameter sweeps.
//! * [`report`]: CSV/JSON emission of result grids.

use std::fmt;

use serde::{Deserialize, Serialize};

pub mod detector;
pub mod distance;
mod error;
pub mod kde;
pub mod report;
pub mod stats;
pub mod store;

pub use error::{Error, ErrorKind, Result};

/// Order `p` of a Minkowski distance. Always finite and strictly positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Norm(f64);

impl Norm {
    pub const FRACTIONAL: Norm = Norm(0.5);
    pub const MANHATTAN: Norm = Norm(1.0);
    pub const EUCLIDEAN: Norm = Norm(2.0);

    /// The three norms of the reference experiment grid.
    pub const GRID: [Norm; 3] = [Norm::FRACTIONAL, Norm::MANHATTAN, Norm::EUCLIDEAN];

    pub fn new(p: f64) -> Result<Self> {
        if p.is_finite() && p > 0.0 {
            Ok(Norm(p))
        } else {
            Err(Error::InvalidConfig(format!(
                "Minkowski order must be finite and > 0, got {p}"
            )))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

impl Eq for Norm {}

impl PartialOrd for Norm {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Norm {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

impl std::hash::Hash for Norm {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.0.to_bits().hash(state);
    }
}

impl TryFrom<f64> for Norm {
    type Error = Error;

    fn try_from(p: f64) -> Result<Self> {
        Norm::new(p)
    }
}

impl From<Norm> for f64 {
    fn from(p: Norm) -> f64 {
        p.0
    }
}

impl fmt::Display for Norm {
    // Debug formatting keeps the trailing ".0" (2.0, not 2).
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

impl std::str::FromStr for Norm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let p: f64 = s
            .trim()
            .parse()
            .map_err(|_| Error::InvalidConfig(format!("not a number: {s:?}")))?;
        Norm::new(p)
    }
}

/// One cell of the experiment grid: training responses per question `r`,
/// keyword count `n`, and Minkowski order `p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CellKey {
    pub r: usize,
    pub n: u8,
    pub p: Norm,
}

impl CellKey {
    pub fn new(r: usize, n: u8, p: Norm) -> Self {
        CellKey { r, n, p }
    }
}

impl fmt::Display for CellKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "r={} n={} p={}", self.r, self.n, self.p)
    }
}
