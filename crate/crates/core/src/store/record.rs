use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Default embedding width produced by the keyword embedder.
pub const DEFAULT_DIM: usize = 768;

/// Keyword counts are 1..=10.
pub const MAX_KEYWORDS: u8 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Hallucinated,
    Genuine,
}

impl Label {
    pub const ALL: [Label; 2] = [Label::Hallucinated, Label::Genuine];

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Hallucinated => "hallucinated",
            Label::Genuine => "genuine",
        }
    }

    pub fn other(self) -> Label {
        match self {
            Label::Hallucinated => Label::Genuine,
            Label::Genuine => Label::Hallucinated,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "hallucinated" => Ok(Label::Hallucinated),
            "genuine" => Ok(Label::Genuine),
            other => Err(other.to_string()),
        }
    }
}

/// Identity of a record within a dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RecordKey {
    pub question_id: u32,
    pub response_id: u32,
    pub label: Label,
    pub n_keywords: u8,
}

/// The embedding of one response's top-`n_keywords` keyword set.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingRecord {
    /// 1-based question index.
    pub question_id: u32,
    /// 1-based response index within the question; order is significant.
    pub response_id: u32,
    pub label: Label,
    pub n_keywords: u8,
    pub vector: Vec<f64>,
    /// Provenance only.
    pub model_tag: String,
}

impl EmbeddingRecord {
    pub fn key(&self) -> RecordKey {
        RecordKey {
            question_id: self.question_id,
            response_id: self.response_id,
            label: self.label,
            n_keywords: self.n_keywords,
        }
    }

    pub fn dim(&self) -> usize {
        self.vector.len()
    }

    /// Checks the per-record invariants that do not depend on the rest of the
    /// dataset. Returns a human-readable reason on failure.
    pub(crate) fn check(&self) -> Result<(), String> {
        if self.question_id == 0 {
            return Err("question_id must be >= 1".into());
        }
        if self.response_id == 0 {
            return Err("response_id must be >= 1".into());
        }
        if !(1..=MAX_KEYWORDS).contains(&self.n_keywords) {
            return Err(format!(
                "n_keywords must be in 1..={MAX_KEYWORDS}, got {}",
                self.n_keywords
            ));
        }
        if let Some(i) = self.vector.iter().position(|v| !v.is_finite()) {
            return Err(format!("vector component {i} is not finite"));
        }
        Ok(())
    }
}
