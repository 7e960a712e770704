//! JSON-lines embedding files.
//!
//! One object per line:
//!
//! ```text
//! {"question_id": 1, "response_id": 1, "label": "genuine", "n_keywords": 3, "model_tag": "m", "vector": [0.1, ...]}
//! ```
//!
//! An optional first line `{"manifest": {"dim": 768, "q": 64}}` declares the
//! dimension and question count up front. Floats are written in their
//! shortest round-trip decimal form, so `load(save(x)) == x` bit for bit.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::record::{EmbeddingRecord, Label};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileManifest {
    pub dim: usize,
    pub q: u32,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestLine {
    manifest: FileManifest,
}

#[derive(Serialize)]
struct ManifestLineRef<'a> {
    manifest: &'a FileManifest,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RecordLine {
    question_id: u32,
    response_id: u32,
    label: String,
    n_keywords: u8,
    model_tag: String,
    vector: Vec<f64>,
}

#[derive(Serialize)]
struct RecordLineRef<'a> {
    question_id: u32,
    response_id: u32,
    label: &'a str,
    n_keywords: u8,
    model_tag: &'a str,
    vector: &'a [f64],
}

/// Parsed contents of an embedding file.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingFile {
    pub manifest: Option<FileManifest>,
    pub dim: usize,
    pub records: Vec<EmbeddingRecord>,
}

/// Loads and validates an embedding file whose vectors must have
/// `expected_dim` components. Records keep file order.
pub fn load_embeddings(
    path: impl AsRef<Path>,
    expected_dim: usize,
) -> Result<Vec<EmbeddingRecord>> {
    Ok(read_file(path.as_ref(), Some(expected_dim))?.records)
}

/// Like [`load_embeddings`] but takes the dimension from the manifest line,
/// or from the first record when there is no manifest.
pub fn load_embeddings_any_dim(path: impl AsRef<Path>) -> Result<EmbeddingFile> {
    read_file(path.as_ref(), None)
}

fn read_file(path: &Path, expected_dim: Option<usize>) -> Result<EmbeddingFile> {
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_embeddings(BufReader::new(file), expected_dim).map_err(|e| match e {
        Error::Io { source, .. } => Error::Io {
            path: path.to_path_buf(),
            source,
        },
        e => e,
    })
}

/// Parses embedding lines from any reader. Line numbers in errors are
/// 1-based physical lines.
pub fn parse_embeddings<R: BufRead>(
    reader: R,
    expected_dim: Option<usize>,
) -> Result<EmbeddingFile> {
    let mut manifest = None;
    let mut dim = expected_dim;
    let mut records = Vec::new();
    let mut seen = HashSet::new();
    let mut first = true;

    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|source| Error::Io {
            path: Default::default(),
            source,
        })?;
        let text = line.trim();
        if text.is_empty() {
            continue;
        }

        if std::mem::take(&mut first) && text.contains("\"manifest\"") {
            let m: ManifestLine = serde_json::from_str(text).map_err(|e| Error::Malformed {
                line: line_no,
                message: e.to_string(),
            })?;
            match dim {
                Some(d) if d != m.manifest.dim => {
                    return Err(Error::DimensionMismatch {
                        line: line_no,
                        expected: d,
                        found: m.manifest.dim,
                    })
                }
                _ => dim = Some(m.manifest.dim),
            }
            if m.manifest.dim == 0 {
                return Err(Error::InvalidRecord {
                    line: line_no,
                    reason: "manifest dim must be >= 1".into(),
                });
            }
            manifest = Some(m.manifest);
            continue;
        }

        let raw: RecordLine = serde_json::from_str(text).map_err(|e| Error::Malformed {
            line: line_no,
            message: e.to_string(),
        })?;
        let label: Label = raw.label.parse().map_err(|label| Error::UnknownLabel {
            line: line_no,
            label,
        })?;
        let record = EmbeddingRecord {
            question_id: raw.question_id,
            response_id: raw.response_id,
            label,
            n_keywords: raw.n_keywords,
            vector: raw.vector,
            model_tag: raw.model_tag,
        };

        let expected = *dim.get_or_insert(record.dim());
        if record.dim() != expected {
            return Err(Error::DimensionMismatch {
                line: line_no,
                expected,
                found: record.dim(),
            });
        }
        record.check().map_err(|reason| Error::InvalidRecord {
            line: line_no,
            reason,
        })?;
        if let Some(m) = &manifest {
            if record.question_id > m.q {
                return Err(Error::InvalidRecord {
                    line: line_no,
                    reason: format!(
                        "question_id {} exceeds manifest q={}",
                        record.question_id, m.q
                    ),
                });
            }
        }
        if !seen.insert(record.key()) {
            return Err(Error::DuplicateKey {
                line: line_no,
                question_id: record.question_id,
                response_id: record.response_id,
                label: record.label,
                n_keywords: record.n_keywords,
            });
        }
        records.push(record);
    }

    let dim = dim.ok_or_else(|| Error::InvalidRecord {
        line: 0,
        reason: "file holds no records and no manifest".into(),
    })?;
    if dim == 0 {
        return Err(Error::InvalidRecord {
            line: 1,
            reason: "empty vector".into(),
        });
    }
    Ok(EmbeddingFile {
        manifest,
        dim,
        records,
    })
}

/// Writes records, preceded by the manifest line when one is given.
pub fn write_embeddings<W: Write>(
    mut out: W,
    records: &[EmbeddingRecord],
    manifest: Option<&FileManifest>,
) -> std::io::Result<()> {
    if let Some(manifest) = manifest {
        serde_json::to_writer(&mut out, &ManifestLineRef { manifest })?;
        out.write_all(b"\n")?;
    }
    for r in records {
        let line = RecordLineRef {
            question_id: r.question_id,
            response_id: r.response_id,
            label: r.label.as_str(),
            n_keywords: r.n_keywords,
            model_tag: &r.model_tag,
            vector: &r.vector,
        };
        serde_json::to_writer(&mut out, &line)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

pub fn save_embeddings(
    path: impl AsRef<Path>,
    records: &[EmbeddingRecord],
    manifest: Option<&FileManifest>,
) -> Result<()> {
    let path = path.as_ref();
    let io_err = |source| Error::Write {
        path: path.to_path_buf(),
        source,
    };
    let file = File::create(path).map_err(io_err)?;
    write_embeddings(BufWriter::new(file), records, manifest).map_err(io_err)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn parse(text: &str, dim: Option<usize>) -> Result<EmbeddingFile> {
        parse_embeddings(text.as_bytes(), dim)
    }

    const TWO_LINES: &str = concat!(
        r#"{"question_id": 1, "response_id": 1, "label": "hallucinated", "n_keywords": 1, "model_tag": "a", "vector": [0.1, 0.2, 0.3, 0.4]}"#,
        "\n",
        r#"{"question_id": 1, "response_id": 2, "label": "genuine", "n_keywords": 1, "model_tag": "b", "vector": [1, 2, 3, 4]}"#,
        "\n",
    );

    #[test]
    fn two_valid_lines_in_file_order() {
        let file = parse(TWO_LINES, Some(4)).unwrap();
        assert_eq!(file.records.len(), 2);
        assert_eq!(file.records[0].label, Label::Hallucinated);
        assert_eq!(file.records[1].response_id, 2);
        assert_eq!(file.records[1].vector, vec![1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn short_vector_names_line() {
        let text = r#"{"question_id": 1, "response_id": 1, "label": "genuine", "n_keywords": 1, "model_tag": "", "vector": [1, 2, 3]}"#;
        match parse(text, Some(4)) {
            Err(Error::DimensionMismatch {
                line: 1,
                expected: 4,
                found: 3,
            }) => {}
            other => panic!("unexpected: {other:?}"),
        }
    }

    #[test]
    fn duplicate_key_is_rejected() {
        let line = r#"{"question_id": 2, "response_id": 1, "label": "genuine", "n_keywords": 3, "model_tag": "", "vector": [1]}"#;
        let text = format!("{line}\n{line}\n");
        match parse(&text, None) {
            Err(Error::DuplicateKey { line: 2, .. }) => {}
            other => panic!("unexpected: {other:?}"),
        }
    }

    #[test]
    fn unknown_label_is_rejected() {
        let text = r#"{"question_id": 1, "response_id": 1, "label": "maybe", "n_keywords": 1, "model_tag": "", "vector": [1]}"#;
        match parse(text, None) {
            Err(Error::UnknownLabel { line: 1, label }) => assert_eq!(label, "maybe"),
            other => panic!("unexpected: {other:?}"),
        }
    }

    #[test]
    fn malformed_line_reports_number() {
        let text = format!("{}not json\n", TWO_LINES);
        match parse(&text, Some(4)) {
            Err(Error::Malformed { line: 3, .. }) => {}
            other => panic!("unexpected: {other:?}"),
        }
        let extra = r#"{"question_id": 1, "response_id": 1, "label": "genuine", "n_keywords": 1, "model_tag": "", "vector": [1], "extra": 0}"#;
        assert!(matches!(
            parse(extra, None),
            Err(Error::Malformed { line: 1, .. })
        ));
    }

    #[test]
    fn keyword_count_out_of_range() {
        let text = r#"{"question_id": 1, "response_id": 1, "label": "genuine", "n_keywords": 11, "model_tag": "", "vector": [1]}"#;
        assert!(matches!(
            parse(text, None),
            Err(Error::InvalidRecord { line: 1, .. })
        ));
        let text = r#"{"question_id": 0, "response_id": 1, "label": "genuine", "n_keywords": 1, "model_tag": "", "vector": [1]}"#;
        assert!(matches!(
            parse(text, None),
            Err(Error::InvalidRecord { line: 1, .. })
        ));
    }

    #[test]
    fn manifest_sets_and_checks_dimension() {
        let text = format!("{{\"manifest\": {{\"dim\": 4, \"q\": 1}}}}\n{TWO_LINES}");
        let file = parse(&text, None).unwrap();
        assert_eq!(file.dim, 4);
        assert_eq!(file.manifest, Some(FileManifest { dim: 4, q: 1 }));
        assert!(matches!(
            parse(&text, Some(8)),
            Err(Error::DimensionMismatch { line: 1, .. })
        ));

        let text = format!("{{\"manifest\": {{\"dim\": 4, \"q\": 0}}}}\n{TWO_LINES}");
        assert!(matches!(
            parse(&text, None),
            Err(Error::InvalidRecord { line: 2, .. })
        ));
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = load_embeddings("/definitely/not/here.jsonl", 4).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }

    fn record_strategy() -> impl Strategy<Value = EmbeddingRecord> {
        (
            1u32..100,
            1u32..100,
            prop::bool::ANY,
            1u8..=10,
            prop::collection::vec(
                prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO,
                5,
            ),
            "[a-z0-9 _\\-\"]{0,8}",
        )
            .prop_map(|(q, r, h, n, vector, model_tag)| EmbeddingRecord {
                question_id: q,
                response_id: r,
                label: if h {
                    Label::Hallucinated
                } else {
                    Label::Genuine
                },
                n_keywords: n,
                vector,
                model_tag,
            })
    }

    proptest! {
        #[test]
        fn save_then_load_is_bit_exact(records in prop::collection::vec(record_strategy(), 0..20)) {
            let mut seen = HashSet::new();
            let records: Vec<_> = records.into_iter().filter(|r| seen.insert(r.key())).collect();
            let mut buf = Vec::new();
            let manifest = FileManifest { dim: 5, q: 100 };
            write_embeddings(&mut buf, &records, Some(&manifest)).unwrap();
            let back = parse_embeddings(buf.as_slice(), Some(5)).unwrap();
            prop_assert_eq!(back.records.len(), records.len());
            for (a, b) in records.iter().zip(&back.records) {
                prop_assert_eq!(a.key(), b.key());
                prop_assert_eq!(&a.model_tag, &b.model_tag);
                let abits: Vec<u64> = a.vector.iter().map(|v| v.to_bits()).collect();
                let bbits: Vec<u64> = b.vector.iter().map(|v| v.to_bits()).collect();
                prop_assert_eq!(abits, bbits);
            }
        }
    }
}
