//! Statistics on distance samples: summaries, divergence and rank tests.

mod compare;
mod kl;
mod summary;
mod wilcoxon;

pub use compare::{compare_cell, DistributionComparison, Significance};
pub use kl::{
    histogram, kl_divergence, kl_of_distributions, KlDirection, KlSettings, DEFAULT_KL_BINS,
    DEFAULT_KL_EPSILON,
};
pub use summary::{boxplot_stats, mean_sd, median, quantile_sorted, sorted_copy, BoxplotStats};
pub use wilcoxon::{
    rank_sum_exact, rank_sum_normal, wilcoxon_rank_sum, RankSumMethod, RankSumTest, EXACT_MAX_SIZE,
};
