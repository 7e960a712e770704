use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{evaluate, EvalReport};
use crate::distance::DistanceSample;
use crate::kde::KdeModel;
use crate::stats::{compare_cell, DistributionComparison};
use crate::store::{build_slice, EmbeddingRecord, ExperimentConfig, Label, Role, RESPONSE_PAIRS};
use crate::{CellKey, Error, Norm, Result};

/// Which pipeline stages a sweep runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stages {
    /// Distribution comparison of the training distances.
    pub compare: bool,
    /// KDE fitting and test-set classification.
    pub evaluate: bool,
}

impl Stages {
    pub const ALL: Stages = Stages {
        compare: true,
        evaluate: true,
    };
    pub const ANALYZE: Stages = Stages {
        compare: true,
        evaluate: false,
    };
    pub const DETECT: Stages = Stages {
        compare: false,
        evaluate: true,
    };
}

/// The grid of cells to run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPlan {
    pub r_values: Vec<usize>,
    pub n_values: Vec<u8>,
    pub p_values: Vec<Norm>,
    pub stages: Stages,
    /// Run `(r, n)` groups concurrently. Uses more memory.
    pub parallel_cells: bool,
}

impl SweepPlan {
    pub fn new(
        r_values: Vec<usize>,
        n_values: Vec<u8>,
        p_values: Vec<Norm>,
        stages: Stages,
    ) -> Self {
        let mut plan = SweepPlan {
            r_values,
            n_values,
            p_values,
            stages,
            parallel_cells: false,
        };
        plan.r_values.sort_unstable();
        plan.r_values.dedup();
        plan.n_values.sort_unstable();
        plan.n_values.dedup();
        plan.p_values.sort();
        plan.p_values.dedup();
        plan
    }

    /// Every standard `r`, `n` in 1..=10, and the three reference norms.
    pub fn full(stages: Stages) -> Self {
        SweepPlan::new(
            RESPONSE_PAIRS.iter().map(|(r, _)| *r).collect(),
            (1..=10).collect(),
            Norm::GRID.to_vec(),
            stages,
        )
    }

    /// Cells in output order: r-major, then n, then p.
    pub fn cells(&self) -> Vec<CellKey> {
        let mut out = Vec::new();
        for &r in &self.r_values {
            for &n in &self.n_values {
                for &p in &self.p_values {
                    out.push(CellKey::new(r, n, p));
                }
            }
        }
        out
    }
}

/// Result of one grid cell; a stage that did not run leaves `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub cell: CellKey,
    pub comparison: Option<DistributionComparison>,
    pub evaluation: Option<EvalReport>,
}

/// Callbacks around each cell. All methods default to no-ops.
pub trait SweepHooks: Sync {
    /// Pre-fitted models for a cell; when given, the cell's KDEs are not
    /// refitted.
    fn provide_models(&self, _cell: CellKey) -> Result<Option<(KdeModel, KdeModel)>> {
        Ok(None)
    }

    /// Called with the intra-class samples of each cell that computes them.
    fn on_samples(&self, _hall: &DistanceSample, _gen: &DistanceSample) -> Result<()> {
        Ok(())
    }

    /// Called with the KDE models of each evaluated cell.
    fn on_models(&self, _hall: &KdeModel, _gen: &KdeModel) -> Result<()> {
        Ok(())
    }
}

pub struct NoHooks;

impl SweepHooks for NoHooks {}

/// Runs slice building, pairwise distances, distribution comparison, KDE
/// fitting and evaluation for every cell of `plan`.
///
/// `base` provides `q` and the KDE/KL settings; `r`, `t`, `n`, `p` are taken
/// from each cell (with `t` paired to `r` unless `base.custom_pairs`).
/// `test` may be `None` when the plan does not evaluate.
pub fn sweep(
    train: &[EmbeddingRecord],
    test: Option<&[EmbeddingRecord]>,
    plan: &SweepPlan,
    base: &ExperimentConfig,
    hooks: &dyn SweepHooks,
) -> Result<Vec<CellResult>> {
    if plan.r_values.is_empty() || plan.n_values.is_empty() || plan.p_values.is_empty() {
        return Err(Error::InvalidConfig("empty sweep plan".into()));
    }
    if plan.stages.evaluate && test.is_none() {
        return Err(Error::InvalidConfig(
            "evaluation requires test records".into(),
        ));
    }

    let groups: Vec<(usize, u8)> = plan
        .r_values
        .iter()
        .flat_map(|&r| plan.n_values.iter().map(move |&n| (r, n)))
        .collect();
    let run = |&(r, n): &(usize, u8)| run_group(train, test, r, n, plan, base, hooks);

    let nested: Vec<Vec<CellResult>> = if plan.parallel_cells {
        groups.par_iter().map(run).collect::<Result<_>>()?
    } else {
        groups.iter().map(run).collect::<Result<_>>()?
    };
    Ok(nested.into_iter().flatten().collect())
}

fn run_group(
    train: &[EmbeddingRecord],
    test: Option<&[EmbeddingRecord]>,
    r: usize,
    n: u8,
    plan: &SweepPlan,
    base: &ExperimentConfig,
    hooks: &dyn SweepHooks,
) -> Result<Vec<CellResult>> {
    let first_cell = CellKey::new(r, n, plan.p_values[0]);
    let config = base.with_cell(r, n, plan.p_values[0]);
    let train_slice =
        build_slice(train, &config, Role::Train).map_err(|e| e.in_cell(first_cell))?;
    let test_slice = match (plan.stages.evaluate, test) {
        (true, Some(test)) => {
            Some(build_slice(test, &config, Role::Test).map_err(|e| e.in_cell(first_cell))?)
        }
        _ => None,
    };

    plan.p_values
        .iter()
        .map(|&p| {
            let cell = CellKey::new(r, n, p);
            let cell_config = base.with_cell(r, n, p);
            run_cell(
                &train_slice,
                test_slice.as_ref(),
                p,
                &cell_config,
                plan.stages,
                hooks,
            )
            .map_err(|e| e.in_cell(cell))
        })
        .collect()
}

fn run_cell(
    train: &crate::store::DatasetSlice,
    test: Option<&crate::store::DatasetSlice>,
    p: Norm,
    config: &ExperimentConfig,
    stages: Stages,
    hooks: &dyn SweepHooks,
) -> Result<CellResult> {
    let cell = CellKey::new(train.config.r, train.config.n, p);
    let provided = if stages.evaluate {
        hooks.provide_models(cell)?
    } else {
        None
    };

    let samples = if stages.compare || provided.is_none() {
        let hall = DistanceSample::intra(train, Label::Hallucinated, p)?;
        let gen = DistanceSample::intra(train, Label::Genuine, p)?;
        hooks.on_samples(&hall, &gen)?;
        Some((hall, gen))
    } else {
        None
    };

    let comparison = match (&samples, stages.compare) {
        (Some((hall, gen)), true) => Some(compare_cell(hall, gen, &config.kl)?),
        _ => None,
    };

    let evaluation = match test {
        Some(test) => {
            let (kde_hall, kde_gen) = match (provided, &samples) {
                (Some(models), _) => models,
                (None, Some((hall, gen))) => (
                    KdeModel::fit(hall, config.kde_rule)?,
                    KdeModel::fit(gen, config.kde_rule)?,
                ),
                (None, None) => unreachable!("samples are computed when no models are provided"),
            };
            drop(samples);
            hooks.on_models(&kde_hall, &kde_gen)?;
            Some(evaluate(test, train, &kde_hall, &kde_gen, p)?)
        }
        None => None,
    };

    Ok(CellResult {
        cell,
        comparison,
        evaluation,
    })
}
