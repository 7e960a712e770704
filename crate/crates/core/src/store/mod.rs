//! Embedding records, files, and the nested train/test slices.

mod config;
mod io;
mod record;
mod slice;
mod synth;

pub use config::{paired_test_count, ExperimentConfig, RESPONSE_PAIRS};
pub use io::{
    load_embeddings, load_embeddings_any_dim, parse_embeddings, save_embeddings, write_embeddings,
    EmbeddingFile, FileManifest,
};
pub use record::{EmbeddingRecord, Label, RecordKey, DEFAULT_DIM, MAX_KEYWORDS};
pub use slice::{build_slice, question_count, DatasetSlice, Role};
pub use synth::{generate_synthetic, ClassParams, SyntheticSpec, SYNTHETIC_TAG};
