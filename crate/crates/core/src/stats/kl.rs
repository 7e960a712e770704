//! Histogram plug-in estimate of the Kullback-Leibler divergence between two
//! samples.
//!
//! Both samples are binned on the same equal-width grid spanning
//! `[min(a ∪ b), max(a ∪ b)]`; `epsilon` is added to every bin count before
//! normalising so that empty bins do not produce infinities.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const DEFAULT_KL_BINS: usize = 100;
pub const DEFAULT_KL_EPSILON: f64 = 1e-10;

/// Which distribution plays `P` in `KL(P ‖ Q)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KlDirection {
    /// `KL(hallucinated ‖ genuine)`.
    #[default]
    HallGen,
    /// `KL(genuine ‖ hallucinated)`.
    GenHall,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KlSettings {
    pub direction: KlDirection,
    pub bins: usize,
    pub epsilon: f64,
}

impl Default for KlSettings {
    fn default() -> Self {
        KlSettings {
            direction: KlDirection::default(),
            bins: DEFAULT_KL_BINS,
            epsilon: DEFAULT_KL_EPSILON,
        }
    }
}

impl KlSettings {
    pub fn validate(&self) -> Result<()> {
        if self.bins < 2 {
            return Err(Error::InvalidConfig(format!(
                "KL needs at least 2 bins, got {}",
                self.bins
            )));
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "KL epsilon must be finite and > 0, got {}",
                self.epsilon
            )));
        }
        Ok(())
    }
}

/// Bin counts of `values` on `bins` equal-width bins over `[lo, hi]`. The
/// right edge belongs to the last bin.
pub fn histogram(values: &[f64], lo: f64, hi: f64, bins: usize) -> Vec<f64> {
    let mut counts = vec![0.0; bins];
    let width = (hi - lo) / bins as f64;
    for &v in values {
        let idx = (((v - lo) / width) as usize).min(bins - 1);
        counts[idx] += 1.0;
    }
    counts
}

fn normalise(mut counts: Vec<f64>, epsilon: f64) -> Vec<f64> {
    counts.iter_mut().for_each(|c| *c += epsilon);
    let total: f64 = counts.iter().sum();
    counts.iter_mut().for_each(|c| *c /= total);
    counts
}

/// `Σ Pᵢ ln(Pᵢ / Qᵢ)` for two probability vectors of equal length.
pub fn kl_of_distributions(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .filter(|(&pi, _)| pi > 0.0)
        .map(|(&pi, &qi)| pi * (pi / qi).ln())
        .sum()
}

/// `KL(a ‖ b)` estimated from the two samples' shared-range histograms.
/// Returns 0 when every value in both samples is identical.
pub fn kl_divergence(a: &[f64], b: &[f64], bins: usize, epsilon: f64) -> Result<f64> {
    KlSettings {
        direction: KlDirection::HallGen,
        bins,
        epsilon,
    }
    .validate()?;
    if a.is_empty() || b.is_empty() {
        return Err(Error::TooFew {
            needed: 1,
            found: 0,
        });
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    let (lo, hi) = a
        .iter()
        .chain(b)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    if lo == hi {
        return Ok(0.0);
    }
    let p = normalise(histogram(a, lo, hi, bins), epsilon);
    let q = normalise(histogram(b, lo, hi, bins), epsilon);
    // Rounding can leave a tiny negative sum when P ≈ Q.
    Ok(kl_of_distributions(&p, &q).max(0.0))
}
