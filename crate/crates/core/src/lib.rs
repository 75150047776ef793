//! Tweet spam classification from token-level and account-level features.
//!
//! The pipeline runs in stages, each in its own module:
//!
//! - [`corpus`]: JSONL account records with embedded tweet histories
//! - [`textscan`]: whitespace tokenizer tagging words, links, mentions, hashtags
//! - [`features`]: the 22 per-instance features
//! - [`correlate`]: Pearson matrix, correlated-feature grouping, product combination
//! - [`ann`]: the 2-layer feedforward classifier
//! - [`baselines`]: KNN, Gaussian naive Bayes, linear SVM
//! - [`eval`]: split, metrics and the comparison report
//! - [`synth`]: seeded synthetic corpora
//! - [`pipeline`]: stage glue and the model file format

pub mod ann;
pub mod baselines;
pub mod corpus;
pub mod correlate;
pub mod eval;
pub mod features;
pub mod pipeline;
pub mod synth;
pub mod textscan;

use thiserror::Error;

pub use corpus::{load_corpus, AccountRecord, Corpus, Label, Tweet};
pub use correlate::Grouping;
pub use features::{extract_matrix, Feature, FeatureMatrix, FeatureVector, FEATURE_COUNT};

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Corpus(#[from] corpus::CorpusError),
    #[error(transparent)]
    Record(#[from] corpus::RecordError),
    #[error(transparent)]
    Feature(#[from] features::FeatureError),
    #[error(transparent)]
    Correlate(#[from] correlate::CorrelateError),
    #[error(transparent)]
    Ann(#[from] ann::AnnError),
    #[error(transparent)]
    Baseline(#[from] baselines::BaselineError),
    #[error(transparent)]
    Eval(#[from] eval::EvalError),
    #[error(transparent)]
    ModelFile(#[from] pipeline::ModelFileError),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
