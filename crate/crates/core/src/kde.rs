//! One-dimensional Gaussian kernel density estimation.
//!
//! `f̂(x) = 1/(m h) Σᵢ φ((x − xᵢ)/h)` with the standard normal kernel `φ`.
//! Log-densities are evaluated as
//! `logsumexp_i(−(x − xᵢ)²/(2h²)) − ln(m h √(2π))`, which stays finite far
//! into the tails where the plain sum underflows to zero.
//!
//! Samples are kept sorted so that evaluation only visits the kernels within
//! reach of the query. A kernel is skipped when its term is below
//! `e^-(37 + ln m)` times the largest one; all skipped terms together change
//! the sum by less than `e^-37`, under half an ulp.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distance::DistanceSample;
use crate::stats::{mean_sd, quantile_sorted, sorted_copy};
use crate::store::Label;
use crate::{CellKey, Error, Result};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// `e^-37 < f64::EPSILON / 2`.
const NEGLIGIBLE_EXPONENT: f64 = 37.0;

/// Bandwidth selection rule.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "rule", content = "h")]
pub enum BandwidthRule {
    /// `σ̂ · m^(−1/5)`.
    #[default]
    Scott,
    /// `0.9 · min(σ̂, IQR/1.349) · m^(−1/5)`.
    Silverman,
    Fixed(f64),
}

impl BandwidthRule {
    pub fn validate(&self) -> Result<()> {
        match *self {
            BandwidthRule::Fixed(h) if !(h.is_finite() && h > 0.0) => Err(Error::InvalidConfig(
                format!("fixed bandwidth must be finite and > 0, got {h}"),
            )),
            _ => Ok(()),
        }
    }

    /// Parses `scott`, `silverman`, or `fixed`; `fixed` takes its value from
    /// `bandwidth`. A bandwidth without a rule implies `fixed`.
    pub fn from_parts(rule: Option<&str>, bandwidth: Option<f64>) -> Result<Self> {
        let rule = match (rule, bandwidth) {
            (None, None) => BandwidthRule::Scott,
            (None, Some(h)) | (Some("fixed"), Some(h)) => BandwidthRule::Fixed(h),
            (Some("fixed"), None) => {
                return Err(Error::InvalidConfig(
                    "fixed bandwidth rule needs a bandwidth value".into(),
                ))
            }
            (Some(name), None) => name.parse()?,
            (Some(name), Some(_)) => {
                return Err(Error::InvalidConfig(format!(
                    "a bandwidth value only applies to the fixed rule, not {name:?}"
                )))
            }
        };
        rule.validate()?;
        Ok(rule)
    }

    fn raw_bandwidth(&self, sorted: &[f64]) -> f64 {
        let m = sorted.len() as f64;
        let (_, sd) = mean_sd(sorted);
        match *self {
            BandwidthRule::Scott => sd * m.powf(-0.2),
            BandwidthRule::Silverman => {
                let iqr = quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);
                let spread = match iqr / 1.349 {
                    s if s > 0.0 => sd.min(s),
                    _ => sd,
                };
                0.9 * spread * m.powf(-0.2)
            }
            BandwidthRule::Fixed(h) => h,
        }
    }
}

impl FromStr for BandwidthRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "scott" => Ok(BandwidthRule::Scott),
            "silverman" => Ok(BandwidthRule::Silverman),
            other => match other.strip_prefix("fixed:") {
                Some(h) => {
                    let h: f64 = h
                        .parse()
                        .map_err(|_| Error::InvalidConfig(format!("bad bandwidth in {other:?}")))?;
                    let rule = BandwidthRule::Fixed(h);
                    rule.validate()?;
                    Ok(rule)
                }
                None => Err(Error::InvalidConfig(format!(
                    "unknown bandwidth rule {other:?} (scott, silverman, fixed:<h>)"
                ))),
            },
        }
    }
}

/// A fitted Gaussian KDE over scalar samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Kde {
    sorted: Vec<f64>,
    bandwidth: f64,
    rule: BandwidthRule,
    log_norm: f64,
}

impl Kde {
    /// Fits a KDE choosing the bandwidth with `rule`. Needs at least two
    /// samples. If the rule yields zero (constant sample) the bandwidth falls
    /// back to `max(1e-9, 1e-3 · |mean|)`.
    pub fn fit(values: &[f64], rule: BandwidthRule) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::TooFew {
                needed: 2,
                found: values.len(),
            });
        }
        rule.validate()?;
        check_finite(values)?;
        let sorted = sorted_copy(values);
        let mut h = rule.raw_bandwidth(&sorted);
        if h.is_nan() || h <= 0.0 {
            let (mean, _) = mean_sd(&sorted);
            h = (1e-3 * mean.abs()).max(1e-9);
        }
        Self::from_sorted(sorted, h, rule)
    }

    /// KDE with a given bandwidth; a single sample is allowed.
    pub fn with_bandwidth(values: &[f64], h: f64) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::TooFew {
                needed: 1,
                found: 0,
            });
        }
        let rule = BandwidthRule::Fixed(h);
        rule.validate()?;
        check_finite(values)?;
        Self::from_sorted(sorted_copy(values), h, rule)
    }

    fn from_sorted(sorted: Vec<f64>, h: f64, rule: BandwidthRule) -> Result<Self> {
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::NonFinite);
        }
        let log_norm = (sorted.len() as f64).ln() + h.ln() + LN_SQRT_2PI;
        Ok(Kde {
            sorted,
            bandwidth: h,
            rule,
            log_norm,
        })
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn rule(&self) -> BandwidthRule {
        self.rule
    }

    /// Samples in ascending order.
    pub fn samples(&self) -> &[f64] {
        &self.sorted
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    /// `ln f̂(x)`. Finite for every finite `x`.
    pub fn log_density(&self, x: f64) -> Result<f64> {
        if !x.is_finite() {
            return Err(Error::NonFinite);
        }
        let s = &self.sorted;
        let h = self.bandwidth;
        let idx = s.partition_point(|&v| v < x);
        let nearest = [idx.checked_sub(1), (idx < s.len()).then_some(idx)]
            .into_iter()
            .flatten()
            .map(|i| (x - s[i]).abs())
            .fold(f64::INFINITY, f64::min);
        let z_min = nearest / h;
        let top = -0.5 * z_min * z_min;

        let cutoff = NEGLIGIBLE_EXPONENT + (s.len() as f64).ln();
        let reach = h * (z_min * z_min + 2.0 * cutoff).sqrt();
        let lo = s.partition_point(|&v| v < x - reach);
        let hi = s.partition_point(|&v| v <= x + reach);
        let inv_2h2 = 0.5 / (h * h);
        let sum: f64 = s[lo..hi]
            .iter()
            .map(|&v| {
                let d = x - v;
                (-(d * d) * inv_2h2 - top).exp()
            })
            .sum();
        Ok(top + sum.ln() - self.log_norm)
    }

    pub fn density(&self, x: f64) -> Result<f64> {
        self.log_density(x).map(f64::exp)
    }

    /// Log-densities of many points, evaluated in parallel, in input order.
    pub fn log_densities(&self, xs: &[f64]) -> Result<Vec<f64>> {
        xs.par_iter().map(|&x| self.log_density(x)).collect()
    }

    /// `Σ ln f̂(xᵢ)` summed sequentially in input order.
    pub fn log_likelihood(&self, xs: &[f64]) -> Result<f64> {
        xs.iter()
            .try_fold(0.0, |acc, &x| Ok(acc + self.log_density(x)?))
    }
}

fn check_finite(values: &[f64]) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite)
    }
}

/// A KDE fitted to one class's intra-class distances in one cell.
#[derive(Debug, Clone, PartialEq)]
pub struct KdeModel {
    pub label: Label,
    pub cell: CellKey,
    pub kde: Kde,
}

impl std::ops::Deref for KdeModel {
    type Target = Kde;

    fn deref(&self) -> &Kde {
        &self.kde
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    label: Label,
    cell: CellKey,
    #[serde(flatten)]
    rule: BandwidthRule,
    bandwidth: f64,
    samples: Vec<f64>,
}

impl KdeModel {
    pub fn fit(sample: &DistanceSample, rule: BandwidthRule) -> Result<Self> {
        Ok(KdeModel {
            label: sample.label,
            cell: sample.cell,
            kde: Kde::fit(&sample.values, rule)?,
        })
    }

    /// Persists the model (key, rule, bandwidth, samples) as JSON.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let io_err = |source| Error::Write {
            path: path.to_path_buf(),
            source,
        };
        let file = ModelFile {
            label: self.label,
            cell: self.cell,
            rule: self.kde.rule,
            bandwidth: self.kde.bandwidth,
            samples: self.kde.sorted.clone(),
        };
        let mut out = BufWriter::new(File::create(path).map_err(io_err)?);
        serde_json::to_writer(&mut out, &file).map_err(|e| io_err(e.into()))?;
        out.write_all(b"\n").map_err(io_err)?;
        out.flush().map_err(io_err)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let reader = File::open(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let file: ModelFile =
            serde_json::from_reader(BufReader::new(reader)).map_err(|e| Error::Malformed {
                line: e.line(),
                message: e.to_string(),
            })?;
        if file.samples.is_empty() {
            return Err(Error::TooFew {
                needed: 1,
                found: 0,
            });
        }
        file.rule.validate()?;
        check_finite(&file.samples)?;
        Ok(KdeModel {
            label: file.label,
            cell: file.cell,
            kde: Kde::from_sorted(sorted_copy(&file.samples), file.bandwidth, file.rule)?,
        })
    }
}
