use serde::{Deserialize, Serialize};

use super::{AspectModelError, AspectSentimentModel, LabeledComment};
use crate::corpus::{AspectCategory, LabelSet};
use crate::metrics::{macro_f1_present, prf_from_counts, MetricsError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AspectScores {
    pub aspect: AspectCategory,
    /// Binary F1 of presence; `None` when the aspect is absent from both gold and prediction.
    pub detection_f1: Option<f64>,
    /// Macro F1 over sentiments on comments where gold and prediction both carry the aspect.
    pub sentiment_f1: Option<f64>,
    pub gold_support: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AspectEvaluation {
    pub per_aspect: Vec<AspectScores>,
    /// Mean of the defined per-aspect detection F1 values.
    pub macro_detection_f1: Option<f64>,
    /// F1 over (aspect, sentiment) labels pooled across comments.
    pub micro_f1: f64,
    /// Fraction of (comment, aspect) decisions with the right presence and sentiment.
    pub micro_accuracy: f64,
}

impl AspectEvaluation {
    pub fn aspect(&self, aspect: AspectCategory) -> &AspectScores {
        &self.per_aspect[aspect.index()]
    }
}

/// Scores predicted label sets against gold label sets, aligned by position.
pub fn evaluate_labels(gold: &[LabelSet], pred: &[LabelSet]) -> Result<AspectEvaluation, MetricsError> {
    if gold.len() != pred.len() {
        return Err(MetricsError::LengthMismatch {
            left: gold.len(),
            right: pred.len(),
        });
    }
    if gold.is_empty() {
        return Err(MetricsError::Empty);
    }
    let mut per_aspect = Vec::with_capacity(AspectCategory::ALL.len());
    let mut correct_decisions = 0usize;
    for aspect in AspectCategory::ALL {
        let (mut tp, mut fp, mut fn_) = (0, 0, 0);
        let mut gold_sentiments = Vec::new();
        let mut pred_sentiments = Vec::new();
        for (g, p) in gold.iter().zip(pred) {
            match (g.contains(aspect), p.contains(aspect)) {
                (true, true) => {
                    tp += 1;
                    let (gs, ps) = (g.sentiment(aspect), p.sentiment(aspect));
                    if gs == ps {
                        correct_decisions += 1;
                    }
                    if let (Some(gs), Some(ps)) = (gs, ps) {
                        gold_sentiments.push(gs);
                        pred_sentiments.push(ps);
                    }
                }
                (false, true) => fp += 1,
                (true, false) => fn_ += 1,
                (false, false) => correct_decisions += 1,
            }
        }
        per_aspect.push(AspectScores {
            aspect,
            detection_f1: (tp + fp + fn_ > 0).then(|| prf_from_counts(tp, fp, fn_).2),
            sentiment_f1: macro_f1_present(&gold_sentiments, &pred_sentiments),
            gold_support: tp + fn_,
        });
    }
    let defined: Vec<f64> = per_aspect.iter().filter_map(|s| s.detection_f1).collect();
    let macro_detection_f1 = (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64);

    let (mut tp, mut fp, mut fn_) = (0, 0, 0);
    for (g, p) in gold.iter().zip(pred) {
        let matched = p.iter().filter(|l| g.contains(l.aspect) && g.sentiment(l.aspect) == l.sentiment).count();
        tp += matched;
        fp += p.len() - matched;
        fn_ += g.len() - matched;
    }
    Ok(AspectEvaluation {
        per_aspect,
        macro_detection_f1,
        micro_f1: prf_from_counts(tp, fp, fn_).2,
        micro_accuracy: correct_decisions as f64 / (gold.len() * AspectCategory::ALL.len()) as f64,
    })
}

/// Labels every test comment with the model and scores the result.
pub fn evaluate_aspect_model(
    model: &AspectSentimentModel,
    test: &[LabeledComment],
) -> Result<AspectEvaluation, AspectModelError> {
    let mut gold = Vec::with_capacity(test.len());
    let mut pred = Vec::with_capacity(test.len());
    for comment in test {
        pred.push(model.label_text(&comment.text)?);
        gold.push(comment.labels.clone());
    }
    evaluate_labels(&gold, &pred).map_err(|_| AspectModelError::EmptyEvaluationSet)
}
