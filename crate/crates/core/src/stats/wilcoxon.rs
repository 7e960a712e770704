//! Two-sided Wilcoxon rank-sum (Mann-Whitney U) test for two independent
//! samples.
//!
//! Ties get average ranks. Small samples (both sizes ≤ [`EXACT_MAX_SIZE`])
//! use the exact permutation distribution of the rank sum; larger ones use
//! the normal approximation with tie-corrected variance and a continuity
//! correction of 1/2.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::{Error, Result};

pub const EXACT_MAX_SIZE: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RankSumMethod {
    Exact,
    Normal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankSumTest {
    /// Mann-Whitney U of the first sample: `R_a − n_a(n_a + 1)/2`.
    pub u: f64,
    pub p_value: f64,
    pub method: RankSumMethod,
}

struct Ranked {
    /// Average ranks of the first sample, doubled so they are integers.
    doubled_a: Vec<u64>,
    /// Doubled ranks of all observations, first sample first.
    doubled_all: Vec<u64>,
    /// Σ (t³ − t) over tie groups.
    tie_term: f64,
}

fn rank(a: &[f64], b: &[f64]) -> Result<Ranked> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::TooFew {
            needed: 1,
            found: 0,
        });
    }
    if a.iter().chain(b).any(|v| v.is_nan()) {
        return Err(Error::NonFinite);
    }
    let mut tagged: Vec<(f64, usize)> = a.iter().chain(b).copied().zip(0..).collect();
    tagged.sort_unstable_by(|x, y| x.0.total_cmp(&y.0));

    let n = tagged.len();
    let mut doubled_all = vec![0u64; n];
    let mut tie_term = 0.0;
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && tagged[end].0 == tagged[start].0 {
            end += 1;
        }
        // ranks start+1..=end, average (start + 1 + end) / 2, doubled
        let doubled = (start + 1 + end) as u64;
        for &(_, idx) in &tagged[start..end] {
            doubled_all[idx] = doubled;
        }
        let t = (end - start) as f64;
        tie_term += t * t * t - t;
        start = end;
    }
    Ok(Ranked {
        doubled_a: doubled_all[..a.len()].to_vec(),
        doubled_all,
        tie_term,
    })
}

fn u_statistic(doubled_rank_sum: u64, na: usize) -> f64 {
    doubled_rank_sum as f64 / 2.0 - (na * (na + 1)) as f64 / 2.0
}

/// Picks the exact test when both samples have at most
/// [`EXACT_MAX_SIZE`] values, the normal approximation otherwise.
pub fn wilcoxon_rank_sum(a: &[f64], b: &[f64]) -> Result<RankSumTest> {
    if a.len() <= EXACT_MAX_SIZE && b.len() <= EXACT_MAX_SIZE {
        rank_sum_exact(a, b)
    } else {
        rank_sum_normal(a, b)
    }
}

/// Exact two-sided p-value from the permutation distribution of the
/// (tie-averaged) rank sum, `P(|S − E[S]| ≥ |s_obs − E[S]|)`.
///
/// Cost grows like `n_a · N³`; meant for small samples.
pub fn rank_sum_exact(a: &[f64], b: &[f64]) -> Result<RankSumTest> {
    let ranked = rank(a, b)?;
    let na = a.len();
    let n = ranked.doubled_all.len();
    let max_sum: u64 = ranked.doubled_all.iter().sum();

    // ways[k][s]: subsets of size k with doubled rank sum s
    let width = max_sum as usize + 1;
    let mut ways = vec![vec![0f64; width]; na + 1];
    ways[0][0] = 1.0;
    for (seen, &r) in ranked.doubled_all.iter().enumerate() {
        let r = r as usize;
        for k in (1..=na.min(seen + 1)).rev() {
            let (lower, upper) = ways.split_at_mut(k);
            let (prev, cur) = (&lower[k - 1], &mut upper[0]);
            for s in (r..width).rev() {
                if prev[s - r] != 0.0 {
                    cur[s] += prev[s - r];
                }
            }
        }
    }

    let observed: u64 = ranked.doubled_a.iter().sum();
    // E[doubled sum] = n_a (N + 1)
    let centre = (na * (n + 1)) as i64;
    let dev_obs = (observed as i64 - centre).abs();
    let dist = &ways[na];
    let total: f64 = dist.iter().sum();
    let extreme: f64 = dist
        .iter()
        .enumerate()
        .filter(|(s, _)| (*s as i64 - centre).abs() >= dev_obs)
        .map(|(_, w)| w)
        .sum();
    Ok(RankSumTest {
        u: u_statistic(observed, na),
        p_value: (extreme / total).min(1.0),
        method: RankSumMethod::Exact,
    })
}

/// Normal approximation with tie-corrected variance and continuity
/// correction.
pub fn rank_sum_normal(a: &[f64], b: &[f64]) -> Result<RankSumTest> {
    let ranked = rank(a, b)?;
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let n = na + nb;
    let u = u_statistic(ranked.doubled_a.iter().sum(), a.len());
    let mean = na * nb / 2.0;
    let var = if n > 1.0 {
        na * nb / 12.0 * ((n + 1.0) - ranked.tie_term / (n * (n - 1.0)))
    } else {
        0.0
    };
    let p_value = if var <= 0.0 {
        1.0
    } else {
        let z = ((u - mean).abs() - 0.5).max(0.0) / var.sqrt();
        (2.0 * Normal::standard().sf(z)).min(1.0)
    };
    Ok(RankSumTest {
        u,
        p_value,
        method: RankSumMethod::Normal,
    })
}
