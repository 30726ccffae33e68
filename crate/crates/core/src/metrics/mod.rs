//! Evaluation: two-class metrics, annotator agreement, the two-stage
//! end-to-end evaluation, and the categorized error report.

mod agreement;
mod classification;
mod end_to_end;

pub use agreement::{average_pairwise_kappa, cohen_kappa, AgreementReport};
pub use classification::{
    compute_metrics, macro_f1_present, prf_from_counts, ClassMetrics, ConfusionMatrix,
    MetricsReport, Verdict,
};
pub use end_to_end::{
    error_report, evaluate_end_to_end, EndToEndReport, ErrorEntry, ErrorFlag, ErrorReportConfig,
    ScoredItem,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("label lists differ in length: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("nothing to evaluate")]
    Empty,
    #[error("missing gold annotation: {0}")]
    MissingGold(String),
    #[error(transparent)]
    Corpus(#[from] crate::corpus::CorpusError),
    #[error(transparent)]
    Labeling(#[from] crate::sdap::SdapError),
    #[error(transparent)]
    Classifier(#[from] crate::disagreement::DisagreementError),
}
