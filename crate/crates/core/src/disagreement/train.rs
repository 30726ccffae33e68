use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ClassOrder, DisagreementError, DisagreementModel, PairEncoding, PairNetwork, TrainConfigPair};
use crate::corpus::{Corpus, CorpusError, GoldLabel, Review, ReviewComment, ReviewPairComment};
use crate::metrics::{compute_metrics, MetricsReport, Verdict};
use crate::nn::{Adam, Parameters};
use crate::text::Vocabulary;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledPair {
    pub id: String,
    pub text_a: String,
    pub text_b: String,
    pub label: Verdict,
}

impl LabeledPair {
    /// Gold-labeled RPCs of a corpus as classifier examples. Unlabeled and
    /// cannot-decide items are skipped.
    pub fn from_rpcs(corpus: &Corpus, rpcs: &[ReviewPairComment]) -> Result<Vec<LabeledPair>, CorpusError> {
        let reviews: BTreeMap<&str, &Review> = corpus.review_index();
        let pairs: BTreeMap<&str, (&str, &str)> = corpus
            .pairs
            .iter()
            .map(|p| (p.pair_id.as_str(), (p.review_a_id.as_str(), p.review_b_id.as_str())))
            .collect();
        let comment = |review_id: &str, comment_id: &str| -> Result<String, CorpusError> {
            let review = reviews
                .get(review_id)
                .ok_or_else(|| CorpusError::UnknownReview(review_id.to_string()))?;
            review
                .comment(comment_id)
                .map(|c: &ReviewComment| c.text.clone())
                .ok_or_else(|| CorpusError::Inconsistent(format!("unknown comment {comment_id}")))
        };
        let mut out = Vec::new();
        for rpc in rpcs {
            let label = match rpc.gold_label {
                Some(GoldLabel::Contradiction) => Verdict::Contradiction,
                Some(GoldLabel::NonContradiction) => Verdict::NonContradiction,
                _ => continue,
            };
            let (a, b) = pairs
                .get(rpc.pair_id.as_str())
                .ok_or_else(|| CorpusError::Inconsistent(format!("unknown pair {}", rpc.pair_id)))?;
            out.push(LabeledPair {
                id: rpc.rpc_id.clone(),
                text_a: comment(a, &rpc.comment_a_id)?,
                text_b: comment(b, &rpc.comment_b_id)?,
                label,
            });
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PairTrainingReport {
    pub epoch_losses: Vec<f64>,
    pub validation_macro_f1: Vec<Option<f64>>,
    pub best_epoch: Option<usize>,
    pub truncated_examples: usize,
}

/// Trains the binary classifier with cross-entropy and Adam, keeping the epoch
/// with the best validation macro F1 (the last epoch without validation data).
pub fn train_disagreement(
    train: &[LabeledPair],
    validation: &[LabeledPair],
    config: &TrainConfigPair,
) -> Result<(DisagreementModel, PairTrainingReport), DisagreementError> {
    config.validate()?;
    let first = train.first().ok_or(DisagreementError::EmptyTrainingSet)?.label;
    if train.iter().all(|p| p.label == first) {
        return Err(DisagreementError::SingleClassTrainingSet(first));
    }
    let vocabulary = Vocabulary::build(
        train.iter().flat_map(|p| [p.text_a.as_str(), p.text_b.as_str()]),
        config.min_token_count,
        config.max_vocab,
    );
    let mut model = DisagreementModel::initialize(vocabulary, config.clone(), ClassOrder::Binary)?;
    let mut report = PairTrainingReport::default();
    let encoded: Vec<(PairEncoding, usize)> = train
        .iter()
        .map(|p| Ok((model.encode(&p.text_a, &p.text_b)?, p.label.index())))
        .collect::<Result<_, DisagreementError>>()?;
    report.truncated_examples = encoded
        .iter()
        .filter(|(e, _)| e.truncated_a + e.truncated_b > 0)
        .count();

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(1));
    let mut optimizer = Adam::new(config.learning_rate, config.weight_decay);
    let mut order: Vec<usize> = (0..encoded.len()).collect();
    let mut best: Option<(f64, PairNetwork)> = None;
    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for batch in order.chunks(config.batch_size) {
            model.network.zero_grad();
            for &i in batch {
                let (input, target) = &encoded[i];
                let forward = model.network.forward_train(input, config.dropout, &mut rng);
                let (loss, d_logits) = PairNetwork::loss(&forward, *target);
                total += loss;
                model.network.backward(input, &forward, &d_logits);
            }
            model.network.scale_grad(1.0 / batch.len() as f64);
            optimizer.step(&mut model.network);
        }
        report.epoch_losses.push(total / encoded.len() as f64);
        let score = if validation.is_empty() {
            None
        } else {
            Some(evaluate_disagreement(&model, validation)?.macro_f1)
        };
        report.validation_macro_f1.push(score);
        let improved = match (&best, score) {
            (None, _) | (_, None) => true,
            (Some((best_score, _)), Some(s)) => s > *best_score,
        };
        if improved {
            best = Some((score.unwrap_or(f64::NEG_INFINITY), model.network.clone()));
            report.best_epoch = Some(epoch);
        }
    }
    if let Some((_, network)) = best {
        model.network = network;
    }
    Ok((model, report))
}

/// Macro metrics of the model's verdicts on labeled pairs.
pub fn evaluate_disagreement(model: &DisagreementModel, data: &[LabeledPair]) -> Result<MetricsReport, DisagreementError> {
    use rayon::prelude::*;
    let pred: Vec<Verdict> = data
        .par_iter()
        .map(|p| Ok(model.predict_texts(&p.id, &p.text_a, &p.text_b)?.label))
        .collect::<Result<_, DisagreementError>>()?;
    let gold: Vec<Verdict> = data.iter().map(|p| p.label).collect();
    compute_metrics(&gold, &pred).map_err(|_| DisagreementError::EmptyEvaluationSet)
}
