use serde::{Deserialize, Serialize};

use super::record::MAX_KEYWORDS;
use crate::kde::BandwidthRule;
use crate::stats::KlSettings;
use crate::{CellKey, Error, Norm, Result};

/// The (training, test) responses-per-question pairs of the reference
/// experiment, roughly an 80/20 split.
pub const RESPONSE_PAIRS: [(usize, usize); 7] =
    [(4, 1), (6, 1), (8, 2), (10, 2), (12, 3), (14, 3), (16, 4)];

/// Test responses per question paired with `r` training responses.
pub fn paired_test_count(r: usize) -> Option<usize> {
    RESPONSE_PAIRS
        .iter()
        .find(|(tr, _)| *tr == r)
        .map(|(_, t)| *t)
}

/// Everything needed to run one grid cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Number of questions.
    pub q: usize,
    /// Training responses per question per class.
    pub r: usize,
    /// Test responses per question per class.
    pub t: usize,
    /// Keywords per response.
    pub n: u8,
    pub p: Norm,
    pub kde_rule: BandwidthRule,
    pub kl: KlSettings,
    /// Accept `(r, t)` combinations outside [`RESPONSE_PAIRS`].
    #[serde(default)]
    pub custom_pairs: bool,
}

impl ExperimentConfig {
    /// Config for one cell with default KDE and KL settings. `t` follows the
    /// standard pairing when `r` is one of the standard values, otherwise 1.
    pub fn new(q: usize, r: usize, n: u8, p: Norm) -> Self {
        let (t, custom_pairs) = match paired_test_count(r) {
            Some(t) => (t, false),
            None => (1, true),
        };
        ExperimentConfig {
            q,
            r,
            t,
            n,
            p,
            kde_rule: BandwidthRule::default(),
            kl: KlSettings::default(),
            custom_pairs,
        }
    }

    pub fn cell(&self) -> CellKey {
        CellKey::new(self.r, self.n, self.p)
    }

    /// Same settings, different cell. Re-pairs `t` unless custom pairs are on.
    pub fn with_cell(&self, r: usize, n: u8, p: Norm) -> Self {
        let mut c = self.clone();
        c.r = r;
        c.n = n;
        c.p = p;
        if !c.custom_pairs {
            c.t = paired_test_count(r).unwrap_or(c.t);
        }
        c
    }

    pub fn validate(&self) -> Result<()> {
        if self.q == 0 {
            return Err(Error::InvalidConfig("q must be >= 1".into()));
        }
        if self.r == 0 || self.t == 0 {
            return Err(Error::InvalidConfig("r and t must be >= 1".into()));
        }
        if !(1..=MAX_KEYWORDS).contains(&self.n) {
            return Err(Error::InvalidConfig(format!(
                "n must be in 1..={MAX_KEYWORDS}, got {}",
                self.n
            )));
        }
        if !self.custom_pairs && !RESPONSE_PAIRS.contains(&(self.r, self.t)) {
            return Err(Error::InvalidConfig(format!(
                "(r, t) = ({}, {}) is not a standard pair; allowed: {:?}",
                self.r, self.t, RESPONSE_PAIRS
            )));
        }
        Norm::new(self.p.get())?;
        self.kde_rule.validate()?;
        self.kl.validate()
    }
}
