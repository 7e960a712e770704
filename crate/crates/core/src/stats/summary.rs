use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Linear-interpolation quantile (R type 7) of an ascending sorted slice.
pub fn quantile_sorted(sorted: &[f64], prob: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    debug_assert!((0.0..=1.0).contains(&prob));
    let h = (sorted.len() - 1) as f64 * prob;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    let frac = h - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

pub fn sorted_copy(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_unstable_by(f64::total_cmp);
    v
}

/// Type-7 median.
pub fn median(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::TooFew {
            needed: 1,
            found: 0,
        });
    }
    Ok(quantile_sorted(&sorted_copy(values), 0.5))
}

/// Mean and unbiased (ddof = 1) standard deviation.
pub fn mean_sd(values: &[f64]) -> (f64, f64) {
    let m = values.len() as f64;
    let mean = values.iter().sum::<f64>() / m;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    (mean, (ss / (m - 1.0)).sqrt())
}

/// Five-number summary plus Tukey fences.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxplotStats {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub lower_fence: f64,
    pub upper_fence: f64,
    /// Values strictly outside the fences.
    pub outlier_count: usize,
}

pub fn boxplot_stats(values: &[f64]) -> Result<BoxplotStats> {
    if values.is_empty() {
        return Err(Error::TooFew {
            needed: 1,
            found: 0,
        });
    }
    let sorted = sorted_copy(values);
    Ok(boxplot_from_sorted(&sorted))
}

pub(crate) fn boxplot_from_sorted(sorted: &[f64]) -> BoxplotStats {
    let q1 = quantile_sorted(sorted, 0.25);
    let q3 = quantile_sorted(sorted, 0.75);
    let iqr = q3 - q1;
    let lower_fence = q1 - 1.5 * iqr;
    let upper_fence = q3 + 1.5 * iqr;
    let outlier_count = sorted
        .iter()
        .filter(|&&v| v < lower_fence || v > upper_fence)
        .count();
    BoxplotStats {
        min: sorted[0],
        q1,
        median: quantile_sorted(sorted, 0.5),
        q3,
        max: sorted[sorted.len() - 1],
        lower_fence,
        upper_fence,
        outlier_count,
    }
}
