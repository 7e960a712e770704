//! Seeded synthetic embeddings with known class geometry.
//!
//! Each class is an isotropic Gaussian `N(mean, sd² I)`. Every response
//! vector is reused for all keyword counts 1..=10, so `n` is metadata only.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::record::{EmbeddingRecord, Label, MAX_KEYWORDS};
use crate::{Error, Result};

pub const SYNTHETIC_TAG: &str = "synthetic";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassParams {
    pub mean: Vec<f64>,
    pub sd: f64,
}

impl ClassParams {
    /// Centred at `mean` in every coordinate.
    pub fn isotropic(d: usize, mean: f64, sd: f64) -> Self {
        ClassParams {
            mean: vec![mean; d],
            sd,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub q: u32,
    pub r: u32,
    pub t: u32,
    pub d: usize,
    pub hallucinated: ClassParams,
    pub genuine: ClassParams,
    pub seed: u64,
}

impl SyntheticSpec {
    fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(Error::InvalidConfig("d must be >= 1".into()));
        }
        if self.q == 0 || self.r == 0 {
            return Err(Error::InvalidConfig("q and r must be >= 1".into()));
        }
        for (label, params) in [
            (Label::Hallucinated, &self.hallucinated),
            (Label::Genuine, &self.genuine),
        ] {
            if !(params.sd.is_finite() && params.sd >= 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "{label} standard deviation must be finite and >= 0, got {}",
                    params.sd
                )));
            }
            if params.mean.len() != self.d {
                return Err(Error::InvalidConfig(format!(
                    "{label} mean has {} components, expected d={}",
                    params.mean.len(),
                    self.d
                )));
            }
            if params.mean.iter().any(|m| !m.is_finite()) {
                return Err(Error::InvalidConfig(format!("{label} mean is not finite")));
            }
        }
        Ok(())
    }
}

/// Generates `(train, test)` records. Per question and class, `r + t`
/// vectors are drawn in response order; the first `r` go to the training
/// set (response ids `1..=r`), the rest to the test set (ids `1..=t`).
pub fn generate_synthetic(
    spec: &SyntheticSpec,
) -> Result<(Vec<EmbeddingRecord>, Vec<EmbeddingRecord>)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let per_class = (spec.q * (spec.r + spec.t)) as usize * MAX_KEYWORDS as usize;
    let mut train = Vec::with_capacity(per_class);
    let mut test = Vec::with_capacity(per_class);

    for (label, params) in [
        (Label::Hallucinated, &spec.hallucinated),
        (Label::Genuine, &spec.genuine),
    ] {
        for question_id in 1..=spec.q {
            for k in 1..=spec.r + spec.t {
                let vector: Vec<f64> = params
                    .mean
                    .iter()
                    .map(|m| {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        m + params.sd * z
                    })
                    .collect();
                let (out, response_id) = if k <= spec.r {
                    (&mut train, k)
                } else {
                    (&mut test, k - spec.r)
                };
                for n_keywords in 1..=MAX_KEYWORDS {
                    out.push(EmbeddingRecord {
                        question_id,
                        response_id,
                        label,
                        n_keywords,
                        vector: vector.clone(),
                        model_tag: SYNTHETIC_TAG.to_string(),
                    });
                }
            }
        }
    }
    Ok((train, test))
}
