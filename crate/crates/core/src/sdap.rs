//! Comment pairs across two reviews that share an aspect with opposite sentiment.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::aspect_model::AspectModelError;
use crate::corpus::{AspectCategory, LabelSet, Review, ReviewComment};

#[derive(Debug, Error)]
pub enum SdapError {
    #[error("review {0} has no gold aspect labels")]
    MissingLabels(String),
    #[error("labeling comment {comment_id}: {source}")]
    Labeler {
        comment_id: String,
        #[source]
        source: AspectModelError,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LabelSource {
    Gold,
    Predicted,
}

/// Anything that assigns aspect labels to a comment.
pub trait CommentLabeler: Sync {
    fn label(&self, comment: &ReviewComment) -> Result<LabelSet, SdapError>;
    fn source(&self) -> LabelSource;
}

/// Returns each comment's own gold labels.
#[derive(Debug, Clone, Copy, Default)]
pub struct GoldLabels;

impl CommentLabeler for GoldLabels {
    fn label(&self, comment: &ReviewComment) -> Result<LabelSet, SdapError> {
        Ok(comment.labels.clone())
    }

    fn source(&self) -> LabelSource {
        LabelSource::Gold
    }
}

/// A comment pair opposing on at least one aspect. The comments carry the labels
/// that produced the match, which are predictions when `label_source` is `Predicted`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdapCandidate {
    pub comment_a: ReviewComment,
    pub comment_b: ReviewComment,
    pub opposed_aspects: BTreeSet<AspectCategory>,
    pub label_source: LabelSource,
}

impl SdapCandidate {
    pub fn rpc_id(&self) -> String {
        crate::corpus::rpc_id(&self.comment_a.comment_id, &self.comment_b.comment_id)
    }
}

/// Aspect same, sentiment opposite: the aspects both sets carry with opposite sentiments.
pub fn is_asop(labels_a: &LabelSet, labels_b: &LabelSet) -> (bool, BTreeSet<AspectCategory>) {
    let opposed = labels_a.opposed_aspects(labels_b);
    (!opposed.is_empty(), opposed)
}

/// Labels of every comment of a review, from gold annotations or a labeler.
pub fn label_review(review: &Review, labeler: Option<&dyn CommentLabeler>) -> Result<Vec<LabelSet>, SdapError> {
    match labeler {
        None => {
            if review.unlabeled || !review.has_labeled_comments() {
                return Err(SdapError::MissingLabels(review.review_id.clone()));
            }
            Ok(review.comments.iter().map(|c| c.labels.clone()).collect())
        }
        Some(labeler) => review.comments.iter().map(|c| labeler.label(c)).collect(),
    }
}

/// Candidates from two reviews whose comments are already labeled, in
/// `(comment index of a, comment index of b)` order.
pub fn extract_labeled(
    review_a: &Review,
    labels_a: &[LabelSet],
    review_b: &Review,
    labels_b: &[LabelSet],
    source: LabelSource,
) -> Vec<SdapCandidate> {
    let mut out = Vec::new();
    for (ca, la) in review_a.comments.iter().zip(labels_a) {
        for (cb, lb) in review_b.comments.iter().zip(labels_b) {
            let (asop, opposed_aspects) = is_asop(la, lb);
            if asop {
                out.push(SdapCandidate {
                    comment_a: ReviewComment { labels: la.clone(), ..ca.clone() },
                    comment_b: ReviewComment { labels: lb.clone(), ..cb.clone() },
                    opposed_aspects,
                    label_source: source,
                });
            }
        }
    }
    out
}

/// All candidate comment pairs between two reviews. Without a labeler the gold labels are used.
pub fn extract_sdaps(
    review_a: &Review,
    review_b: &Review,
    labeler: Option<&dyn CommentLabeler>,
) -> Result<Vec<SdapCandidate>, SdapError> {
    let source = labeler.map_or(LabelSource::Gold, |l| l.source());
    let labels_a = label_review(review_a, labeler)?;
    let labels_b = label_review(review_b, labeler)?;
    Ok(extract_labeled(review_a, &labels_a, review_b, &labels_b, source))
}

pub fn pair_has_sdap(
    review_a: &Review,
    review_b: &Review,
    labeler: Option<&dyn CommentLabeler>,
) -> Result<bool, SdapError> {
    Ok(!extract_sdaps(review_a, review_b, labeler)?.is_empty())
}
