//! Review corpus: data model, ingestion, pair generation, weak labeling,
//! annotation round trips, statistics and splitting.

mod annotation;
mod ingest;
mod pairs;
pub mod segment;
mod split;
mod stats;
mod types;

pub use annotation::{
    annotator_labels, export_annotation_batch, import_annotations, write_annotation_batches, AnnotationFile,
    Stratify, ANNOTATION_HEADER,
};
pub use ingest::{load_corpus, parse_jsonl, write_jsonl, write_snapshot, CorpusFormat};
pub use pairs::{build_corpus, compile_rpcs, generate_pairs, weak_label_pair, BuildSummary};
pub use segment::{segment_review, RuleSegmenter, Segmenter};
pub use split::{partition, split_dataset, Split, SplitSpec, SplitUnit};
pub use stats::{corpus_stats, AspectLabelCounts, StatsTable, VenueStats};
pub use types::*;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("line {line}: malformed record: {reason}")]
    MalformedRecord { line: usize, reason: String },
    #[error("duplicate id: {0}")]
    DuplicateId(String),
    #[error("unknown aspect name: {0:?}")]
    UnknownAspectName(String),
    #[error("unknown sentiment: {0:?}")]
    UnknownSentiment(String),
    #[error("aspect {aspect} cannot carry sentiment {sentiment:?}")]
    InvalidLabel {
        aspect: AspectCategory,
        sentiment: Option<Sentiment>,
    },
    #[error("aspect {0} labeled twice with different sentiments")]
    DuplicateAspect(AspectCategory),
    #[error("review text is empty")]
    EmptyReview,
    #[error("review {0} has no labeled comments")]
    UnlabeledComments(String),
    #[error("pair {0} is not a contradiction candidate")]
    NotACandidate(String),
    #[error("unknown review id: {0}")]
    UnknownReview(String),
    #[error("no input to export")]
    EmptyInput,
    #[error("batch size must be at least 1")]
    BadBatchSize,
    #[error("unknown rpc id: {0}")]
    UnknownRpcId(String),
    #[error("conflicting labels for {rpc_id}: {first} vs {second}")]
    ConflictingLabels {
        rpc_id: String,
        first: String,
        second: String,
    },
    #[error("{file}: row {row}: bad label token {token:?} (expected C, N or CNT)")]
    BadLabelToken {
        file: String,
        row: usize,
        token: String,
    },
    #[error("invalid split: {0}")]
    InvalidSplit(String),
    #[error("inconsistent corpus: {0}")]
    Inconsistent(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}
