use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{compute_metrics, MetricsError, MetricsReport, Verdict};
use crate::corpus::{Corpus, GoldLabel, Review, ReviewPair, ReviewPairComment, WeakLabel};
use crate::disagreement::PairClassifier;
use crate::sdap::{extract_labeled, label_review, CommentLabeler};
use crate::text::tokenize;

/// One stage-2 decision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredItem {
    pub rpc_id: String,
    pub pair_id: String,
    pub text_a: String,
    pub text_b: String,
    pub gold: Verdict,
    pub predicted: Verdict,
    /// Classifier probability of Contradiction; `None` when the pair never reached the classifier.
    pub probability: Option<f64>,
    /// The gold candidate was not among the predicted candidates.
    pub propagated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndToEndReport {
    /// Accuracy of "has any candidate" against the gold weak labels.
    pub stage1_accuracy: f64,
    pub stage1_pairs: usize,
    /// `None` when no candidate reached stage 2.
    pub stage2: Option<MetricsReport>,
    pub items: Vec<ScoredItem>,
    /// Gold cannot-decide items left out of stage 2.
    pub skipped_cannot_decide: usize,
}

/// Runs the labeler and classifier over test review pairs and scores both stages.
///
/// Predicted candidates are matched to gold RPCs by comment ids. A predicted
/// candidate with no gold RPC counts as gold NonContradiction; a gold
/// Contradiction RPC with no predicted candidate counts as a missed contradiction.
pub fn evaluate_end_to_end(
    corpus: &Corpus,
    test_pairs: &[ReviewPair],
    labeler: &dyn CommentLabeler,
    classifier: &dyn PairClassifier,
) -> Result<EndToEndReport, MetricsError> {
    if test_pairs.is_empty() {
        return Err(MetricsError::Empty);
    }
    let reviews: BTreeMap<&str, &Review> = corpus.review_index();
    let test_ids: BTreeSet<&str> = test_pairs.iter().map(|p| p.pair_id.as_str()).collect();
    let gold_rpcs: BTreeMap<&str, &ReviewPairComment> = corpus
        .rpcs
        .iter()
        .filter(|r| test_ids.contains(r.pair_id.as_str()))
        .map(|r| (r.rpc_id.as_str(), r))
        .collect();
    let review = |id: &str| {
        reviews
            .get(id)
            .copied()
            .ok_or_else(|| MetricsError::Corpus(crate::corpus::CorpusError::UnknownReview(id.to_string())))
    };

    let mut stage1_correct = 0usize;
    let mut items = Vec::new();
    let mut seen = BTreeSet::new();
    let mut skipped = 0usize;
    for pair in test_pairs {
        let weak = pair.weak_label.ok_or_else(|| MetricsError::MissingGold(pair.pair_id.clone()))?;
        let (a, b) = (review(&pair.review_a_id)?, review(&pair.review_b_id)?);
        let labels_a = label_review(a, Some(labeler))?;
        let labels_b = label_review(b, Some(labeler))?;
        let candidates = extract_labeled(a, &labels_a, b, &labels_b, labeler.source());
        if !candidates.is_empty() == (weak == WeakLabel::Candidate) {
            stage1_correct += 1;
        }
        for candidate in candidates {
            let rpc_id = candidate.rpc_id();
            let gold = match gold_rpcs.get(rpc_id.as_str()) {
                None => Verdict::NonContradiction,
                Some(rpc) => match rpc.gold_label {
                    Some(GoldLabel::Contradiction) => Verdict::Contradiction,
                    Some(GoldLabel::NonContradiction) => Verdict::NonContradiction,
                    Some(GoldLabel::CannotDecide) => {
                        seen.insert(rpc_id);
                        skipped += 1;
                        continue;
                    }
                    None => return Err(MetricsError::MissingGold(rpc_id)),
                },
            };
            let prediction = classifier.classify(&candidate)?;
            items.push(ScoredItem {
                rpc_id: rpc_id.clone(),
                pair_id: pair.pair_id.clone(),
                text_a: candidate.comment_a.text.clone(),
                text_b: candidate.comment_b.text.clone(),
                gold,
                predicted: prediction.label,
                probability: Some(prediction.probability_contradiction),
                propagated: false,
            });
            seen.insert(rpc_id);
        }
    }
    for (rpc_id, rpc) in &gold_rpcs {
        if rpc.gold_label != Some(GoldLabel::Contradiction) || seen.contains(*rpc_id) {
            continue;
        }
        let pair = corpus
            .pair(&rpc.pair_id)
            .ok_or_else(|| MetricsError::MissingGold(rpc.pair_id.clone()))?;
        let text = |review_id: &str, comment_id: &str| -> Result<String, MetricsError> {
            review(review_id)?
                .comment(comment_id)
                .map(|c| c.text.clone())
                .ok_or_else(|| MetricsError::MissingGold(comment_id.to_string()))
        };
        items.push(ScoredItem {
            rpc_id: rpc_id.to_string(),
            pair_id: rpc.pair_id.clone(),
            text_a: text(&pair.review_a_id, &rpc.comment_a_id)?,
            text_b: text(&pair.review_b_id, &rpc.comment_b_id)?,
            gold: Verdict::Contradiction,
            predicted: Verdict::NonContradiction,
            probability: None,
            propagated: true,
        });
    }
    let gold: Vec<Verdict> = items.iter().map(|i| i.gold).collect();
    let pred: Vec<Verdict> = items.iter().map(|i| i.predicted).collect();
    Ok(EndToEndReport {
        stage1_accuracy: stage1_correct as f64 / test_pairs.len() as f64,
        stage1_pairs: test_pairs.len(),
        stage2: (!items.is_empty()).then(|| compute_metrics(&gold, &pred)).transpose()?,
        items,
        skipped_cannot_decide: skipped,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum ErrorFlag {
    /// A comment exceeds the configured token length.
    Long,
    /// The contradiction was lost before the classifier saw it.
    Propagated,
    Other,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ErrorReportConfig {
    pub long_comment_tokens: usize,
}

impl Default for ErrorReportConfig {
    fn default() -> Self {
        ErrorReportConfig { long_comment_tokens: 280 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorEntry {
    pub rpc_id: String,
    pub pair_id: String,
    pub gold: Verdict,
    pub predicted: Verdict,
    /// Probability the model gave to its wrong answer; `None` for propagated misses.
    pub confidence: Option<f64>,
    pub flags: BTreeSet<ErrorFlag>,
    pub tokens_a: usize,
    pub tokens_b: usize,
    pub text_a: String,
    pub text_b: String,
}

/// Wrong stage-2 decisions with automatic flags, most confident first,
/// propagated misses last.
pub fn error_report(report: &EndToEndReport, config: &ErrorReportConfig) -> Vec<ErrorEntry> {
    let mut out: Vec<ErrorEntry> = report
        .items
        .iter()
        .filter(|i| i.gold != i.predicted)
        .map(|i| {
            let tokens_a = tokenize(&i.text_a).len();
            let tokens_b = tokenize(&i.text_b).len();
            let mut flags = BTreeSet::new();
            if tokens_a > config.long_comment_tokens || tokens_b > config.long_comment_tokens {
                flags.insert(ErrorFlag::Long);
            }
            if i.propagated {
                flags.insert(ErrorFlag::Propagated);
            }
            if flags.is_empty() {
                flags.insert(ErrorFlag::Other);
            }
            let confidence = i.probability.map(|p| match i.predicted {
                Verdict::Contradiction => p,
                Verdict::NonContradiction => 1.0 - p,
            });
            ErrorEntry {
                rpc_id: i.rpc_id.clone(),
                pair_id: i.pair_id.clone(),
                gold: i.gold,
                predicted: i.predicted,
                confidence,
                flags,
                tokens_a,
                tokens_b,
                text_a: i.text_a.clone(),
                text_b: i.text_b.clone(),
            }
        })
        .collect();
    out.sort_by(|x, y| {
        let key = |c: Option<f64>| c.unwrap_or(f64::NEG_INFINITY);
        key(y.confidence)
            .total_cmp(&key(x.confidence))
            .then_with(|| x.rpc_id.cmp(&y.rpc_id))
    });
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn item(rpc: &str, gold: Verdict, predicted: Verdict, probability: Option<f64>, words: usize) -> ScoredItem {
        ScoredItem {
            rpc_id: rpc.into(),
            pair_id: "p".into(),
            text_a: vec!["w"; words].join(" "),
            text_b: "short".into(),
            gold,
            predicted,
            probability,
            propagated: probability.is_none(),
        }
    }

    fn report(items: Vec<ScoredItem>) -> EndToEndReport {
        let gold: Vec<_> = items.iter().map(|i| i.gold).collect();
        let pred: Vec<_> = items.iter().map(|i| i.predicted).collect();
        EndToEndReport {
            stage1_accuracy: 1.0,
            stage1_pairs: 1,
            stage2: Some(compute_metrics(&gold, &pred).unwrap()),
            items,
            skipped_cannot_decide: 0,
        }
    }

    #[test]
    fn flags_and_ordering() {
        use Verdict::*;
        let r = report(vec![
            item("ok", Contradiction, Contradiction, Some(0.9), 3),
            item("long", NonContradiction, Contradiction, Some(0.6), 350),
            item("sure", Contradiction, NonContradiction, Some(0.05), 3),
            item("lost", Contradiction, NonContradiction, None, 3),
        ]);
        let errors = error_report(&r, &ErrorReportConfig::default());
        let ids: Vec<_> = errors.iter().map(|e| e.rpc_id.as_str()).collect();
        assert_eq!(ids, ["sure", "long", "lost"]);
        assert_eq!(errors[0].flags, BTreeSet::from([ErrorFlag::Other]));
        assert!((errors[0].confidence.unwrap() - 0.95).abs() < 1e-12);
        assert_eq!(errors[1].flags, BTreeSet::from([ErrorFlag::Long]));
        assert_eq!(errors[2].flags, BTreeSet::from([ErrorFlag::Propagated]));
    }

    #[test]
    fn flag_names_serialize_uppercase() {
        assert_eq!(serde_json::to_string(&ErrorFlag::Propagated).unwrap(), "\"PROPAGATED\"");
    }
}
