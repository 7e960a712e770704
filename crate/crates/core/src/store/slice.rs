use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::record::{EmbeddingRecord, Label};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Train,
    Test,
}

/// The train or test population of one `(r or t, n)` configuration.
///
/// Records of each class are ordered by question id, then response id. That
/// order defines the pair enumeration order of the distance samples.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSlice {
    pub config: ExperimentConfig,
    pub role: Role,
    pub hallucinated: Vec<EmbeddingRecord>,
    pub genuine: Vec<EmbeddingRecord>,
}

impl DatasetSlice {
    pub fn class(&self, label: Label) -> &[EmbeddingRecord] {
        match label {
            Label::Hallucinated => &self.hallucinated,
            Label::Genuine => &self.genuine,
        }
    }

    /// Responses per question per class for this slice's role.
    pub fn per_question(&self) -> usize {
        match self.role {
            Role::Train => self.config.r,
            Role::Test => self.config.t,
        }
    }

    pub fn dim(&self) -> Option<usize> {
        self.hallucinated
            .first()
            .or_else(|| self.genuine.first())
            .map(EmbeddingRecord::dim)
    }

    pub fn len(&self) -> usize {
        self.hallucinated.len() + self.genuine.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_balanced(&self) -> bool {
        self.hallucinated.len() == self.genuine.len()
    }

    /// Record keys of both classes, for nesting checks.
    pub fn id_set(&self) -> BTreeSet<(Label, u32, u32)> {
        self.hallucinated
            .iter()
            .chain(&self.genuine)
            .map(|r| (r.label, r.question_id, r.response_id))
            .collect()
    }
}

/// Selects the first `r` (train) or `t` (test) responses per question per
/// class, by ascending response id, among the records with `config.n`
/// keywords.
///
/// Prefix selection makes slices nested: the slice for a larger `r` contains
/// every record of the slice for a smaller `r`.
pub fn build_slice(
    records: &[EmbeddingRecord],
    config: &ExperimentConfig,
    role: Role,
) -> Result<DatasetSlice> {
    config.validate()?;
    let take = match role {
        Role::Train => config.r,
        Role::Test => config.t,
    };

    let mut groups: BTreeMap<(Label, u32), Vec<&EmbeddingRecord>> = BTreeMap::new();
    let mut questions = BTreeSet::new();
    let mut dim = None;
    for rec in records.iter().filter(|r| r.n_keywords == config.n) {
        match dim {
            None => dim = Some(rec.dim()),
            Some(d) if d != rec.dim() => return Err(Error::MixedDimensions(d, rec.dim())),
            _ => {}
        }
        questions.insert(rec.question_id);
        groups
            .entry((rec.label, rec.question_id))
            .or_default()
            .push(rec);
    }

    if questions.len() != config.q {
        return Err(Error::InvalidConfig(format!(
            "expected q={} questions with n={} records, found {}",
            config.q,
            config.n,
            questions.len()
        )));
    }

    let mut slice = DatasetSlice {
        config: config.clone(),
        role,
        hallucinated: Vec::with_capacity(config.q * take),
        genuine: Vec::with_capacity(config.q * take),
    };
    for label in Label::ALL {
        for &question_id in &questions {
            let mut group = groups.remove(&(label, question_id)).unwrap_or_default();
            if group.len() < take {
                return Err(Error::InsufficientResponses {
                    question_id,
                    label,
                    n_keywords: config.n,
                    needed: take,
                    found: group.len(),
                });
            }
            group.sort_by_key(|r| r.response_id);
            let out = match label {
                Label::Hallucinated => &mut slice.hallucinated,
                Label::Genuine => &mut slice.genuine,
            };
            out.extend(group.into_iter().take(take).cloned());
        }
    }
    Ok(slice)
}

/// Number of distinct question ids among the records.
pub fn question_count(records: &[EmbeddingRecord]) -> usize {
    records
        .iter()
        .map(|r| r.question_id)
        .collect::<BTreeSet<_>>()
        .len()
}
