//! Sentence-pair contradiction classifier over candidate comment pairs, plus the
//! adapter that lets three-way NLI checkpoints answer the same two-way question.

mod checkpoint;
mod encode;
mod network;
mod train;

pub use checkpoint::{load_nli_pretrained, PairManifest};
pub use encode::{encode_pair, truncate_longest_first, PairEncoding};
pub use network::{PairDims, PairForward, PairNetwork};
pub use train::{evaluate_disagreement, train_disagreement, LabeledPair, PairTrainingReport};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::Verdict;
use crate::sdap::SdapCandidate;
use crate::text::Vocabulary;

pub const BACKBONE_ID: &str = "bilstm-pair";

#[derive(Debug, Error)]
pub enum DisagreementError {
    #[error("comment text has no tokens")]
    EmptyText,
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("evaluation set is empty")]
    EmptyEvaluationSet,
    #[error("training set contains only {0}")]
    SingleClassTrainingSet(Verdict),
    #[error("probabilities ({0}, {1}, {2}) do not form a distribution")]
    NotADistribution(f64, f64, f64),
    #[error("incompatible checkpoint: {0}")]
    IncompatibleCheckpoint(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfigPair {
    pub batch_size: usize,
    pub max_tokens: usize,
    pub dropout: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
    pub weight_decay: f64,
    pub decision_threshold: f64,
    pub embedding_dim: usize,
    pub hidden_dim: usize,
    pub feature_dim: usize,
    pub min_token_count: usize,
    pub max_vocab: Option<usize>,
}

impl Default for TrainConfigPair {
    fn default() -> Self {
        TrainConfigPair {
            batch_size: 16,
            max_tokens: 280,
            dropout: 0.1,
            learning_rate: 1e-5,
            epochs: 3,
            seed: 42,
            weight_decay: 0.0,
            decision_threshold: 0.5,
            embedding_dim: 64,
            hidden_dim: 64,
            feature_dim: 64,
            min_token_count: 1,
            max_vocab: Some(30_000),
        }
    }
}

impl TrainConfigPair {
    pub fn validate(&self) -> Result<(), DisagreementError> {
        let fail = |msg: &str| Err(DisagreementError::InvalidConfig(msg.to_string()));
        if self.max_tokens < 8 {
            return fail("max_tokens must be at least 8");
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
        if !(self.decision_threshold > 0.0 && self.decision_threshold < 1.0) {
            return fail("decision_threshold must lie in (0, 1)");
        }
        if self.batch_size == 0 || [self.embedding_dim, self.hidden_dim, self.feature_dim].contains(&0) {
            return fail("batch_size and layer sizes must be positive");
        }
        Ok(())
    }
}

/// What the network's output classes mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ClassOrder {
    /// `[NonContradiction, Contradiction]`.
    Binary,
    /// `[entailment, neutral, contradiction]`, collapsed at prediction time.
    Nli,
}

impl ClassOrder {
    pub fn labels(self) -> Vec<String> {
        let names: &[&str] = match self {
            ClassOrder::Binary => &["NonContradiction", "Contradiction"],
            ClassOrder::Nli => &["entailment", "neutral", "contradiction"],
        };
        names.iter().map(|s| s.to_string()).collect()
    }

    pub fn from_labels(labels: &[String]) -> Option<ClassOrder> {
        [ClassOrder::Binary, ClassOrder::Nli]
            .into_iter()
            .find(|order| order.labels() == labels)
    }

    pub fn classes(self) -> usize {
        match self {
            ClassOrder::Binary => 2,
            ClassOrder::Nli => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContradictionPrediction {
    pub rpc_id: String,
    #[serde(rename = "prob")]
    pub probability_contradiction: f64,
    pub label: Verdict,
}

/// Contradiction versus the pooled entailment and neutral mass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollapsedNli {
    pub probability_contradiction: f64,
    pub probability_non_contradiction: f64,
    pub label: Verdict,
}

/// `Contradiction` iff `probability >= threshold`.
pub fn decide(probability: f64, threshold: f64) -> Verdict {
    Verdict::from_bool(probability >= threshold)
}

/// Two-way view of a three-way NLI distribution.
pub fn collapse_nli_probabilities(
    entail: f64,
    neutral: f64,
    contradiction: f64,
    threshold: f64,
) -> Result<CollapsedNli, DisagreementError> {
    let valid = [entail, neutral, contradiction].iter().all(|p| p.is_finite() && *p >= 0.0)
        && (entail + neutral + contradiction - 1.0).abs() <= 1e-6;
    if !valid {
        return Err(DisagreementError::NotADistribution(entail, neutral, contradiction));
    }
    Ok(CollapsedNli {
        probability_contradiction: contradiction,
        probability_non_contradiction: entail + neutral,
        label: decide(contradiction, threshold),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DisagreementModel {
    pub vocabulary: Vocabulary,
    pub network: PairNetwork,
    pub config: TrainConfigPair,
    pub class_order: ClassOrder,
    pub backbone_id: String,
    /// Average over both input orders instead of using the canonical order only.
    pub symmetrize: bool,
}

impl DisagreementModel {
    pub fn initialize(vocabulary: Vocabulary, config: TrainConfigPair, class_order: ClassOrder) -> Result<Self, DisagreementError> {
        config.validate()?;
        let dims = PairDims {
            vocab: vocabulary.len(),
            embedding_dim: config.embedding_dim,
            hidden_dim: config.hidden_dim,
            feature_dim: config.feature_dim,
            classes: class_order.classes(),
        };
        let network = PairNetwork::new(dims, &mut ChaCha8Rng::seed_from_u64(config.seed));
        Ok(DisagreementModel {
            vocabulary,
            network,
            config,
            class_order,
            backbone_id: BACKBONE_ID.to_string(),
            symmetrize: false,
        })
    }

    pub fn threshold(&self) -> f64 {
        self.config.decision_threshold
    }

    pub fn encode(&self, comment_a: &str, comment_b: &str) -> Result<PairEncoding, DisagreementError> {
        encode_pair(&self.vocabulary, comment_a, comment_b, self.config.max_tokens)
    }

    /// Contradiction probability for one input order.
    fn directed_probability(&self, comment_a: &str, comment_b: &str) -> Result<f64, DisagreementError> {
        let p = self.network.infer(&self.encode(comment_a, comment_b)?).probabilities;
        match self.class_order {
            ClassOrder::Binary => Ok(p[1]),
            ClassOrder::Nli => Ok(collapse_nli_probabilities(p[0], p[1], p[2], self.threshold())?.probability_contradiction),
        }
    }

    pub fn contradiction_probability(&self, comment_a: &str, comment_b: &str) -> Result<f64, DisagreementError> {
        let forward = self.directed_probability(comment_a, comment_b)?;
        if !self.symmetrize {
            return Ok(forward);
        }
        Ok(0.5 * (forward + self.directed_probability(comment_b, comment_a)?))
    }

    pub fn predict_texts(&self, rpc_id: &str, comment_a: &str, comment_b: &str) -> Result<ContradictionPrediction, DisagreementError> {
        let probability = self.contradiction_probability(comment_a, comment_b)?;
        Ok(ContradictionPrediction {
            rpc_id: rpc_id.to_string(),
            probability_contradiction: probability,
            label: decide(probability, self.threshold()),
        })
    }

    pub fn predict(&self, candidate: &SdapCandidate) -> Result<ContradictionPrediction, DisagreementError> {
        self.predict_texts(&candidate.rpc_id(), &candidate.comment_a.text, &candidate.comment_b.text)
    }

    /// Predictions for many candidates, computed in parallel, in input order.
    pub fn predict_batch(&self, candidates: &[SdapCandidate]) -> Result<Vec<ContradictionPrediction>, DisagreementError> {
        candidates.par_iter().map(|c| self.predict(c)).collect()
    }
}

/// Anything that judges a candidate comment pair.
pub trait PairClassifier: Sync {
    fn classify(&self, candidate: &SdapCandidate) -> Result<ContradictionPrediction, DisagreementError>;
}

impl PairClassifier for DisagreementModel {
    fn classify(&self, candidate: &SdapCandidate) -> Result<ContradictionPrediction, DisagreementError> {
        self.predict(candidate)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    pub(crate) fn tiny_model(order: ClassOrder) -> DisagreementModel {
        let vocab = Vocabulary::build(["the method is novel", "the method is not novel"], 1, None);
        let config = TrainConfigPair {
            embedding_dim: 6,
            hidden_dim: 4,
            feature_dim: 5,
            ..TrainConfigPair::default()
        };
        DisagreementModel::initialize(vocab, config, order).unwrap()
    }

    #[test]
    fn collapse_examples() {
        let c = collapse_nli_probabilities(0.2, 0.1, 0.7, 0.5).unwrap();
        assert_eq!((c.label, c.probability_contradiction), (Verdict::Contradiction, 0.7));
        let c = collapse_nli_probabilities(0.5, 0.5, 0.0, 0.5).unwrap();
        assert_eq!((c.label, c.probability_contradiction), (Verdict::NonContradiction, 0.0));
        let c = collapse_nli_probabilities(0.3, 0.3, 0.4, 0.5).unwrap();
        assert_eq!(c.label, Verdict::NonContradiction);
        let c = collapse_nli_probabilities(0.25, 0.25, 0.5, 0.5).unwrap();
        assert_eq!(c.label, Verdict::Contradiction);
        assert!(collapse_nli_probabilities(0.5, 0.5, 0.5, 0.5).is_err());
        assert!(collapse_nli_probabilities(-0.1, 0.6, 0.5, 0.5).is_err());
    }

    #[test]
    fn config_defaults() {
        let c = TrainConfigPair::default();
        assert_eq!((c.batch_size, c.max_tokens, c.dropout, c.learning_rate), (16, 280, 0.1, 1e-5));
        assert!(TrainConfigPair { max_tokens: 7, ..c.clone() }.validate().is_err());
        assert!(TrainConfigPair { learning_rate: 0.0, ..c }.validate().is_err());
    }

    #[test]
    fn predictions_are_deterministic_and_bounded() {
        let m = tiny_model(ClassOrder::Binary);
        let a = m.predict_texts("x", "the method is novel", "the method is not novel").unwrap();
        let b = m.predict_texts("x", "the method is novel", "the method is not novel").unwrap();
        assert_eq!(a, b);
        assert!((0.0..=1.0).contains(&a.probability_contradiction));
        assert_eq!(a.label, decide(a.probability_contradiction, 0.5));
    }

    #[test]
    fn symmetrized_probability_ignores_order() {
        let mut m = tiny_model(ClassOrder::Binary);
        m.symmetrize = true;
        let ab = m.contradiction_probability("the method is novel", "not novel").unwrap();
        let ba = m.contradiction_probability("not novel", "the method is novel").unwrap();
        assert!((ab - ba).abs() < 1e-12);
    }

    #[test]
    fn nli_models_report_the_contradiction_column() {
        let m = tiny_model(ClassOrder::Nli);
        let enc = m.encode("the method", "is novel").unwrap();
        let p = m.network.infer(&enc).probabilities;
        let got = m.contradiction_probability("the method", "is novel").unwrap();
        assert_eq!(got, p[2]);
    }

    #[test]
    fn class_orders_round_trip() {
        for order in [ClassOrder::Binary, ClassOrder::Nli] {
            assert_eq!(ClassOrder::from_labels(&order.labels()), Some(order));
        }
        assert_eq!(ClassOrder::from_labels(&["a".into()]), None);
    }

    proptest! {
        #[test]
        fn raising_the_threshold_never_creates_contradictions(p in 0.0f64..=1.0, t1 in 0.01f64..0.99, t2 in 0.01f64..0.99) {
            let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
            if decide(p, lo) == Verdict::NonContradiction {
                prop_assert_eq!(decide(p, hi), Verdict::NonContradiction);
            }
        }

        #[test]
        fn collapse_conserves_mass(raw in proptest::array::uniform3(0.0f64..1.0)) {
            let total: f64 = raw.iter().sum();
            prop_assume!(total > 1e-9);
            let [e, n, c] = raw.map(|x| x / total);
            let out = collapse_nli_probabilities(e, n, c, 0.5).unwrap();
            prop_assert_eq!(out.probability_contradiction, c);
            prop_assert_eq!(out.probability_non_contradiction, e + n);
            prop_assert!((out.probability_contradiction + out.probability_non_contradiction - 1.0).abs() < 1e-9);
        }
    }
}
