use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ClassOrder, DisagreementError, DisagreementModel, PairDims, PairNetwork, TrainConfigPair};
use crate::nn::{read_weights, write_weights, Parameters};
use crate::text::Vocabulary;

const FORMAT_VERSION: u32 = 1;
const MANIFEST: &str = "manifest.json";
const WEIGHTS: &str = "weights.bin";
const VOCABULARY: &str = "vocab.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairManifest {
    pub format_version: u32,
    pub backbone_id: String,
    pub class_order: Vec<String>,
    pub threshold: f64,
    pub max_tokens: usize,
    pub config: TrainConfigPair,
    pub dims: PairDims,
}

impl DisagreementModel {
    pub fn manifest(&self) -> PairManifest {
        PairManifest {
            format_version: FORMAT_VERSION,
            backbone_id: self.backbone_id.clone(),
            class_order: self.class_order.labels(),
            threshold: self.config.decision_threshold,
            max_tokens: self.config.max_tokens,
            config: self.config.clone(),
            dims: self.network.dims,
        }
    }

    pub fn save(&self, dir: &Path) -> Result<(), DisagreementError> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join(MANIFEST), serde_json::to_string_pretty(&self.manifest())?)?;
        fs::write(dir.join(VOCABULARY), serde_json::to_string(&self.vocabulary)?)?;
        write_weights(&dir.join(WEIGHTS), &self.network.flat_values())?;
        Ok(())
    }

    /// Loads a checkpoint with either class order.
    pub fn load(dir: &Path) -> Result<Self, DisagreementError> {
        let incompatible = |msg: String| DisagreementError::IncompatibleCheckpoint(msg);
        let manifest: PairManifest = serde_json::from_str(&fs::read_to_string(dir.join(MANIFEST))?)?;
        if manifest.format_version != FORMAT_VERSION {
            return Err(incompatible(format!("format version {}", manifest.format_version)));
        }
        let class_order = ClassOrder::from_labels(&manifest.class_order)
            .ok_or_else(|| incompatible(format!("unknown class order {:?}", manifest.class_order)))?;
        if class_order.classes() != manifest.dims.classes {
            return Err(incompatible("class order and output width disagree".into()));
        }
        let vocabulary: Vocabulary = serde_json::from_str(&fs::read_to_string(dir.join(VOCABULARY))?)?;
        if vocabulary.len() != manifest.dims.vocab {
            return Err(incompatible("vocabulary size does not match the manifest".into()));
        }
        let mut config = manifest.config;
        config.decision_threshold = manifest.threshold;
        config.max_tokens = manifest.max_tokens;
        config.validate()?;
        let mut network = PairNetwork::new(manifest.dims, &mut ChaCha8Rng::seed_from_u64(0));
        let weights = read_weights(&dir.join(WEIGHTS))?;
        if !network.load_flat_values(&weights) {
            return Err(incompatible(format!(
                "expected {} weights, found {}",
                network.num_parameters(),
                weights.len()
            )));
        }
        Ok(DisagreementModel {
            vocabulary,
            network,
            config,
            class_order,
            backbone_id: manifest.backbone_id,
            symmetrize: false,
        })
    }
}

/// Loads a three-way NLI checkpoint; predictions go through the two-way collapse.
pub fn load_nli_pretrained(backbone_id: &str, source: &Path) -> Result<DisagreementModel, DisagreementError> {
    let model = DisagreementModel::load(source)?;
    if model.class_order != ClassOrder::Nli {
        return Err(DisagreementError::IncompatibleCheckpoint(
            "checkpoint does not provide a three-way NLI head".into(),
        ));
    }
    if model.backbone_id != backbone_id {
        return Err(DisagreementError::IncompatibleCheckpoint(format!(
            "checkpoint backbone is {}, expected {backbone_id}",
            model.backbone_id
        )));
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::super::tests::tiny_model;
    use super::super::{collapse_nli_probabilities, BACKBONE_ID};
    use super::*;

    #[test]
    fn binary_round_trip() {
        let model = tiny_model(ClassOrder::Binary);
        let dir = tempfile::tempdir().unwrap();
        model.save(dir.path()).unwrap();
        let back = DisagreementModel::load(dir.path()).unwrap();
        assert_eq!(back, model);
        let manifest: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(dir.path().join(MANIFEST)).unwrap()).unwrap();
        assert_eq!(manifest["class_order"], serde_json::json!(["NonContradiction", "Contradiction"]));
        assert!(matches!(
            load_nli_pretrained(BACKBONE_ID, dir.path()),
            Err(DisagreementError::IncompatibleCheckpoint(_))
        ));
    }

    #[test]
    fn nli_checkpoint_predicts_through_the_collapse() {
        let model = tiny_model(ClassOrder::Nli);
        let dir = tempfile::tempdir().unwrap();
        model.save(dir.path()).unwrap();
        assert!(load_nli_pretrained("other", dir.path()).is_err());
        let loaded = load_nli_pretrained(BACKBONE_ID, dir.path()).unwrap();
        let p = loaded.network.infer(&loaded.encode("the method", "is not novel").unwrap()).probabilities;
        let collapsed = collapse_nli_probabilities(p[0], p[1], p[2], 0.5).unwrap();
        let prediction = loaded.predict_texts("x", "the method", "is not novel").unwrap();
        assert_eq!(prediction.probability_contradiction, collapsed.probability_contradiction);
        assert_eq!(prediction.label, collapsed.label);
        assert!((collapsed.probability_contradiction + collapsed.probability_non_contradiction - 1.0).abs() < 1e-12);
    }
}
