//! Joint aspect category detection and aspect sentiment classification of review
//! comments. Each aspect attends over the comment's tokens; its sentiment is the
//! attention-weighted mean of per-word sentiment probabilities.

mod checkpoint;
mod evaluate;
mod network;
mod train;

pub use evaluate::{evaluate_aspect_model, evaluate_labels, AspectEvaluation, AspectScores};
pub use network::{aggregate_sentiment, AspectDims, AspectNetwork, Forward};
pub use train::{train_aspect_model, EpochRecord, LabeledComment, TrainingReport};

use std::collections::{BTreeMap, BTreeSet};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{AspectCategory, AspectLabel, LabelSet, ReviewComment, Sentiment};
use crate::nn::EncoderKind;
use crate::sdap::{CommentLabeler, LabelSource};
use crate::text::{tokenize, Vocabulary};

#[derive(Debug, Error)]
pub enum AspectModelError {
    #[error("comment has no tokens")]
    EmptyAfterTokenization,
    #[error("Summary carries no sentiment")]
    SummaryAspectRequested,
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("evaluation set is empty")]
    EmptyEvaluationSet,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("incompatible checkpoint: {0}")]
    IncompatibleCheckpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfigAspect {
    pub batch_size: usize,
    pub dropout: f64,
    pub epochs: usize,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub detection_threshold: f64,
    pub seed: u64,
    pub backbone: EncoderKind,
    pub embedding_dim: usize,
    pub hidden_dim: usize,
    pub attention_dim: usize,
    pub acsa_hidden_dim: usize,
    pub acsa_layers: usize,
    pub word_hidden_dim: usize,
    pub min_token_count: usize,
    pub max_vocab: Option<usize>,
}

impl Default for TrainConfigAspect {
    fn default() -> Self {
        TrainConfigAspect {
            batch_size: 16,
            dropout: 0.5,
            epochs: 15,
            learning_rate: 1e-3,
            weight_decay: 1e-3,
            detection_threshold: 0.5,
            seed: 42,
            backbone: EncoderKind::Lstm,
            embedding_dim: 64,
            hidden_dim: 64,
            attention_dim: 32,
            acsa_hidden_dim: 32,
            acsa_layers: 2,
            word_hidden_dim: 32,
            min_token_count: 1,
            max_vocab: Some(30_000),
        }
    }
}

impl TrainConfigAspect {
    pub fn validate(&self) -> Result<(), AspectModelError> {
        let fail = |msg: &str| Err(AspectModelError::InvalidConfig(msg.to_string()));
        if !(self.detection_threshold > 0.0 && self.detection_threshold < 1.0) {
            return fail("detection_threshold must lie in (0, 1)");
        }
        if !(self.learning_rate > 0.0) {
            return fail("learning_rate must be positive");
        }
        if !(self.weight_decay >= 0.0) {
            return fail("weight_decay must be non-negative");
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return fail("dropout must lie in [0, 1)");
        }
        if self.batch_size == 0 {
            return fail("batch_size must be positive");
        }
        let dims = [
            self.embedding_dim,
            self.hidden_dim,
            self.attention_dim,
            self.acsa_hidden_dim,
            self.acsa_layers,
            self.word_hidden_dim,
        ];
        if dims.contains(&0) {
            return fail("layer sizes must be positive");
        }
        Ok(())
    }

    pub(crate) fn dims(&self, vocab: usize) -> AspectDims {
        AspectDims {
            vocab,
            embedding_dim: self.embedding_dim,
            backbone: self.backbone,
            acd_hidden: self.hidden_dim,
            attention_dim: self.attention_dim,
            acsa_hidden: self.acsa_hidden_dim,
            acsa_layers: self.acsa_layers,
            word_hidden: self.word_hidden_dim,
        }
    }
}

/// Detection probabilities and attention for all aspects of one comment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcdPrediction {
    pub tokens: Vec<String>,
    pub detection: BTreeMap<AspectCategory, f64>,
    pub attention: BTreeMap<AspectCategory, Vec<f64>>,
}

/// Sentiment of one aspect and the per-word evidence it was pooled from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcsaPrediction {
    /// Probability of Positive.
    pub probability: f64,
    pub attention: Vec<f64>,
    pub word_probabilities: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AspectPrediction {
    pub tokens: Vec<String>,
    pub detection: BTreeMap<AspectCategory, f64>,
    /// Positive probability, present only for detected sentiment-bearing aspects.
    pub sentiment: BTreeMap<AspectCategory, f64>,
    pub attention: BTreeMap<AspectCategory, Vec<f64>>,
}

impl AspectPrediction {
    /// Thresholded labels; Positive iff the sentiment probability is at least 0.5.
    pub fn labels(&self, threshold: f64) -> LabelSet {
        let summary = self
            .detection
            .iter()
            .filter(|(a, &p)| !a.sentiment_bearing() && p >= threshold)
            .map(|(&a, _)| a)
            .collect();
        self.sentiment_labels(summary)
    }

    fn sentiment_labels(&self, summary: Vec<AspectCategory>) -> LabelSet {
        let mut out: LabelSet = self
            .sentiment
            .iter()
            .map(|(&aspect, &p)| {
                let s = if p >= 0.5 { Sentiment::Positive } else { Sentiment::Negative };
                AspectLabel { aspect, sentiment: Some(s) }
            })
            .collect();
        for aspect in summary {
            out.insert(AspectLabel { aspect, sentiment: None }).expect("summary has no sentiment");
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AspectSentimentModel {
    pub vocabulary: Vocabulary,
    pub network: AspectNetwork,
    pub config: TrainConfigAspect,
}

impl AspectSentimentModel {
    /// Untrained model over a vocabulary, initialised from `config.seed`.
    pub fn initialize(vocabulary: Vocabulary, config: TrainConfigAspect) -> Result<Self, AspectModelError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let network = AspectNetwork::new(config.dims(vocabulary.len()), &mut rng);
        Ok(AspectSentimentModel {
            vocabulary,
            network,
            config,
        })
    }

    pub fn threshold(&self) -> f64 {
        self.config.detection_threshold
    }

    fn run(&self, text: &str) -> Result<(Vec<String>, Forward), AspectModelError> {
        let tokens = tokenize(text);
        if tokens.is_empty() {
            return Err(AspectModelError::EmptyAfterTokenization);
        }
        let ids: Vec<u32> = tokens.iter().map(|t| self.vocabulary.id(t)).collect();
        Ok((tokens, self.network.infer(&ids)))
    }

    pub fn predict_acd(&self, text: &str) -> Result<AcdPrediction, AspectModelError> {
        let (tokens, forward) = self.run(text)?;
        let probs = forward.detection();
        Ok(AcdPrediction {
            tokens,
            detection: AspectCategory::ALL.iter().map(|&a| (a, probs[a.index()])).collect(),
            attention: AspectCategory::ALL
                .iter()
                .map(|&a| (a, forward.attention[a.index()].to_vec()))
                .collect(),
        })
    }

    pub fn predict_acsa(
        &self,
        text: &str,
        aspects: &BTreeSet<AspectCategory>,
    ) -> Result<BTreeMap<AspectCategory, AcsaPrediction>, AspectModelError> {
        if aspects.iter().any(|a| !a.sentiment_bearing()) {
            return Err(AspectModelError::SummaryAspectRequested);
        }
        let (_, forward) = self.run(text)?;
        Ok(aspects
            .iter()
            .map(|&a| {
                let k = a.index();
                let prediction = AcsaPrediction {
                    probability: forward.sentiment[k],
                    attention: forward.attention[k].to_vec(),
                    word_probabilities: forward.word_sentiment[k].to_vec(),
                };
                (a, prediction)
            })
            .collect())
    }

    /// Full prediction using the configured detection threshold.
    pub fn predict(&self, text: &str) -> Result<AspectPrediction, AspectModelError> {
        self.predict_with_threshold(text, self.threshold())
    }

    pub fn predict_with_threshold(&self, text: &str, threshold: f64) -> Result<AspectPrediction, AspectModelError> {
        let (tokens, forward) = self.run(text)?;
        let probs = forward.detection();
        let sentiment = AspectCategory::sentiment_bearing_aspects()
            .filter(|a| probs[a.index()] >= threshold)
            .map(|a| (a, forward.sentiment[a.index()]))
            .collect();
        Ok(AspectPrediction {
            tokens,
            detection: AspectCategory::ALL.iter().map(|&a| (a, probs[a.index()])).collect(),
            sentiment,
            attention: AspectCategory::ALL
                .iter()
                .map(|&a| (a, forward.attention[a.index()].to_vec()))
                .collect(),
        })
    }

    pub fn label_text(&self, text: &str) -> Result<LabelSet, AspectModelError> {
        self.label_text_with_threshold(text, self.threshold())
    }

    pub fn label_text_with_threshold(&self, text: &str, threshold: f64) -> Result<LabelSet, AspectModelError> {
        Ok(self.predict_with_threshold(text, threshold)?.labels(threshold))
    }

    pub fn label_comment(&self, comment: &ReviewComment) -> Result<LabelSet, AspectModelError> {
        self.label_text(&comment.text)
    }
}

impl CommentLabeler for AspectSentimentModel {
    fn label(&self, comment: &ReviewComment) -> Result<LabelSet, crate::sdap::SdapError> {
        self.label_comment(comment)
            .map_err(|source| crate::sdap::SdapError::Labeler {
                comment_id: comment.comment_id.clone(),
                source,
            })
    }

    fn source(&self) -> LabelSource {
        LabelSource::Predicted
    }
}
