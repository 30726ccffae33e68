use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{evaluate_labels, AspectModelError, AspectNetwork, AspectSentimentModel, TrainConfigAspect};
use crate::corpus::{AspectCategory, LabelSet};
use crate::nn::{Adam, Parameters};
use crate::text::Vocabulary;

/// A comment text with its gold labels. An empty label set means the comment addresses no aspect.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledComment {
    pub text: String,
    pub labels: LabelSet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub mean_loss: f64,
    pub validation_macro_f1: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingReport {
    pub epochs: Vec<EpochRecord>,
    /// 1-based epoch whose weights were kept; `None` for an untrained model.
    pub best_epoch: Option<usize>,
    pub warnings: Vec<String>,
}

/// Trains with Adam on the summed detection and sentiment losses, keeping the
/// weights of the epoch with the best validation macro detection F1 (the last
/// epoch when there is no validation data).
pub fn train_aspect_model(
    train: &[LabeledComment],
    validation: &[LabeledComment],
    config: &TrainConfigAspect,
) -> Result<(AspectSentimentModel, TrainingReport), AspectModelError> {
    config.validate()?;
    if train.is_empty() {
        return Err(AspectModelError::EmptyTrainingSet);
    }
    let vocabulary = Vocabulary::build(
        train.iter().map(|c| c.text.as_str()),
        config.min_token_count,
        config.max_vocab,
    );
    let mut model = AspectSentimentModel::initialize(vocabulary, config.clone())?;
    let mut report = TrainingReport::default();

    for aspect in AspectCategory::ALL {
        if !train.iter().any(|c| c.labels.contains(aspect)) {
            report
                .warnings
                .push(format!("no training comment mentions {aspect}; its detector learns only negatives"));
        }
    }
    let encoded: Vec<(Vec<u32>, &LabelSet)> = train
        .iter()
        .filter_map(|c| {
            let ids = model.vocabulary.encode(&c.text);
            (!ids.is_empty()).then_some((ids, &c.labels))
        })
        .collect();
    if encoded.len() < train.len() {
        report
            .warnings
            .push(format!("{} training comments had no tokens and were skipped", train.len() - encoded.len()));
    }
    if encoded.is_empty() {
        return Err(AspectModelError::EmptyTrainingSet);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(1));
    let mut optimizer = Adam::new(config.learning_rate, config.weight_decay);
    let mut order: Vec<usize> = (0..encoded.len()).collect();
    let mut best: Option<(f64, AspectNetwork)> = None;

    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let mut total_loss = 0.0;
        for batch in order.chunks(config.batch_size) {
            model.network.zero_grad();
            for &i in batch {
                let (ids, gold) = &encoded[i];
                let forward = model.network.forward_train(ids, config.dropout, &mut rng);
                let (loss, d_logits, d_sentiment) = AspectNetwork::loss(&forward, gold);
                total_loss += loss;
                model.network.backward(&forward, &d_logits, &d_sentiment);
            }
            model.network.scale_grad(1.0 / batch.len() as f64);
            optimizer.step(&mut model.network);
        }
        let validation_macro_f1 = validation_score(&model, validation);
        report.epochs.push(EpochRecord {
            epoch,
            mean_loss: total_loss / encoded.len() as f64,
            validation_macro_f1,
        });
        let score = validation_macro_f1.unwrap_or(f64::NEG_INFINITY);
        let improved = match &best {
            None => true,
            Some((best_score, _)) => validation.is_empty() || score > *best_score,
        };
        if improved {
            best = Some((score, model.network.clone()));
            report.best_epoch = Some(epoch);
        }
    }
    if let Some((_, network)) = best {
        model.network = network;
    }
    Ok((model, report))
}

fn validation_score(model: &AspectSentimentModel, validation: &[LabeledComment]) -> Option<f64> {
    let (gold, pred): (Vec<LabelSet>, Vec<LabelSet>) = validation
        .iter()
        .filter_map(|c| model.label_text(&c.text).ok().map(|p| (c.labels.clone(), p)))
        .unzip();
    evaluate_labels(&gold, &pred).ok().and_then(|e| e.macro_detection_f1)
}
