use std::fmt;

use serde::{Deserialize, Serialize};

use super::kl::{kl_divergence, KlDirection, KlSettings};
use super::summary::{boxplot_from_sorted, sorted_copy, BoxplotStats};
use super::wilcoxon::{wilcoxon_rank_sum, RankSumTest};
use crate::distance::DistanceSample;
use crate::store::Label;
use crate::{CellKey, Error, Result};

/// Significance stars: `***` p < 0.01, `**` p < 0.05, `*` p < 0.1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Significance {
    #[serde(rename = "***")]
    P01,
    #[serde(rename = "**")]
    P05,
    #[serde(rename = "*")]
    P10,
    #[serde(rename = "ns")]
    NotSignificant,
}

impl Significance {
    pub fn from_p(p: f64) -> Self {
        if p < 0.01 {
            Significance::P01
        } else if p < 0.05 {
            Significance::P05
        } else if p < 0.1 {
            Significance::P10
        } else {
            Significance::NotSignificant
        }
    }

    pub fn stars(self) -> &'static str {
        match self {
            Significance::P01 => "***",
            Significance::P05 => "**",
            Significance::P10 => "*",
            Significance::NotSignificant => "ns",
        }
    }
}

impl fmt::Display for Significance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.stars())
    }
}

/// How the hallucinated and genuine distance distributions of one cell
/// differ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionComparison {
    pub cell: CellKey,
    pub kl_divergence: f64,
    pub kl_direction: KlDirection,
    /// `median(hallucinated) − median(genuine)`.
    pub median_difference: f64,
    pub wilcoxon_u: f64,
    pub wilcoxon_p: f64,
    pub significance: Significance,
    pub boxplot_hallucinated: BoxplotStats,
    pub boxplot_genuine: BoxplotStats,
}

/// Compares the two intra-class samples of one cell.
pub fn compare_cell(
    hall: &DistanceSample,
    gen: &DistanceSample,
    kl: &KlSettings,
) -> Result<DistributionComparison> {
    if hall.label != Label::Hallucinated || gen.label != Label::Genuine {
        return Err(Error::KeyMismatch(format!(
            "expected (hallucinated, genuine) samples, got ({}, {})",
            hall.label, gen.label
        )));
    }
    if hall.cell != gen.cell {
        return Err(Error::KeyMismatch(format!(
            "samples from different cells: {} vs {}",
            hall.cell, gen.cell
        )));
    }
    kl.validate()?;
    if hall.values.is_empty() || gen.values.is_empty() {
        return Err(Error::TooFew {
            needed: 1,
            found: 0,
        });
    }

    let (p, q) = match kl.direction {
        KlDirection::HallGen => (&hall.values, &gen.values),
        KlDirection::GenHall => (&gen.values, &hall.values),
    };
    let kl_value = kl_divergence(p, q, kl.bins, kl.epsilon)?;
    let RankSumTest { u, p_value, .. } = wilcoxon_rank_sum(&hall.values, &gen.values)?;
    let box_h = boxplot_from_sorted(&sorted_copy(&hall.values));
    let box_g = boxplot_from_sorted(&sorted_copy(&gen.values));

    Ok(DistributionComparison {
        cell: hall.cell,
        kl_divergence: kl_value,
        kl_direction: kl.direction,
        median_difference: box_h.median - box_g.median,
        wilcoxon_u: u,
        wilcoxon_p: p_value,
        significance: Significance::from_p(p_value),
        boxplot_hallucinated: box_h,
        boxplot_genuine: box_g,
    })
}
