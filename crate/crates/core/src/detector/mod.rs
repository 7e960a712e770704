//! Classification of test responses by KDE log-likelihood scores.
//!
//! For a test embedding, the distances to every hallucinated training point
//! are scored under the hallucinated KDE and summed (`s_hall`); likewise for
//! genuine (`s_nohall`). The response is called hallucinated iff
//! `s_hall > s_nohall`; ties go to genuine.

mod sweep;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distance::cross_distances;
use crate::kde::KdeModel;
use crate::store::{DatasetSlice, EmbeddingRecord, Label, Role};
use crate::{CellKey, Error, Norm, Result};

pub use sweep::{sweep, CellResult, NoHooks, Stages, SweepHooks, SweepPlan};

/// Scores of one test embedding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassScores {
    pub question_id: u32,
    pub response_id: u32,
    pub s_hall: f64,
    pub s_nohall: f64,
    pub predicted: Label,
    pub truth: Label,
}

/// The decision rule: hallucinated iff `s_hall > s_nohall` (strictly).
pub fn decide(s_hall: f64, s_nohall: f64) -> Label {
    if s_hall > s_nohall {
        Label::Hallucinated
    } else {
        Label::Genuine
    }
}

fn check_model(model: &KdeModel, label: Label, cell: CellKey) -> Result<()> {
    if model.label != label {
        return Err(Error::KeyMismatch(format!(
            "expected a {label} model, got {}",
            model.label
        )));
    }
    if model.cell != cell {
        return Err(Error::KeyMismatch(format!(
            "{label} model fitted for {}, slice is {cell}",
            model.cell
        )));
    }
    Ok(())
}

/// Scores one test record against a training slice.
pub fn score(
    test: &EmbeddingRecord,
    train: &DatasetSlice,
    kde_hall: &KdeModel,
    kde_gen: &KdeModel,
    p: Norm,
) -> Result<ClassScores> {
    let cell = CellKey::new(train.config.r, train.config.n, p);
    check_model(kde_hall, Label::Hallucinated, cell)?;
    check_model(kde_gen, Label::Genuine, cell)?;

    let to_hall = cross_distances(&test.vector, &train.hallucinated, p)?;
    let to_gen = cross_distances(&test.vector, &train.genuine, p)?;
    let s_hall = kde_hall.log_likelihood(&to_hall)?;
    let s_nohall = kde_gen.log_likelihood(&to_gen)?;
    Ok(ClassScores {
        question_id: test.question_id,
        response_id: test.response_id,
        s_hall,
        s_nohall,
        predicted: decide(s_hall, s_nohall),
        truth: test.label,
    })
}

/// Confusion counts with hallucinated as the positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Confusion {
    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a Label, &'a Label)>) -> Self {
        let mut c = Confusion::default();
        for (predicted, truth) in pairs {
            match (predicted, truth) {
                (Label::Hallucinated, Label::Hallucinated) => c.tp += 1,
                (Label::Hallucinated, Label::Genuine) => c.fp += 1,
                (Label::Genuine, Label::Genuine) => c.tn += 1,
                (Label::Genuine, Label::Hallucinated) => c.fn_ += 1,
            }
        }
        c
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn accuracy(&self) -> f64 {
        match self.total() {
            0 => 0.0,
            n => (self.tp + self.tn) as f64 / n as f64,
        }
    }

    /// F1 of the hallucinated class; 0 when it is undefined.
    pub fn f1(&self) -> f64 {
        match 2 * self.tp + self.fp + self.fn_ {
            0 => 0.0,
            d => (2 * self.tp) as f64 / d as f64,
        }
    }
}

/// Classification quality on one cell's test slice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub cell: CellKey,
    pub t: usize,
    pub accuracy: f64,
    pub f1_hallucinated: f64,
    #[serde(flatten)]
    pub confusion: Confusion,
    /// False when the two training classes differ in size; the summed scores
    /// then weigh the classes unequally.
    pub balanced_training: bool,
    #[serde(skip)]
    pub scores: Vec<ClassScores>,
}

/// Scores every test record (hallucinated first, then genuine) and tallies
/// the metrics. Test points are scored in parallel; results keep slice order.
pub fn evaluate(
    test: &DatasetSlice,
    train: &DatasetSlice,
    kde_hall: &KdeModel,
    kde_gen: &KdeModel,
    p: Norm,
) -> Result<EvalReport> {
    if test.role != Role::Test || train.role != Role::Train {
        return Err(Error::KeyMismatch(
            "evaluate needs a test and a train slice".into(),
        ));
    }
    if test.is_empty() {
        return Err(Error::TooFew {
            needed: 1,
            found: 0,
        });
    }
    if test.config.n != train.config.n || test.config.q != train.config.q {
        return Err(Error::KeyMismatch(format!(
            "test slice (q={}, n={}) does not match train slice (q={}, n={})",
            test.config.q, test.config.n, train.config.q, train.config.n
        )));
    }

    let scores: Vec<ClassScores> = test
        .hallucinated
        .par_iter()
        .chain(test.genuine.par_iter())
        .map(|rec| score(rec, train, kde_hall, kde_gen, p))
        .collect::<Result<_>>()?;
    let confusion = Confusion::from_pairs(scores.iter().map(|s| (&s.predicted, &s.truth)));
    Ok(EvalReport {
        cell: CellKey::new(train.config.r, train.config.n, p),
        t: test.config.t,
        accuracy: confusion.accuracy(),
        f1_hallucinated: confusion.f1(),
        confusion,
        balanced_training: train.is_balanced(),
        scores,
    })
}
