use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{AspectDims, AspectModelError, AspectNetwork, AspectSentimentModel, TrainConfigAspect};
use crate::corpus::AspectCategory;
use crate::nn::{read_weights, write_weights, Parameters};
use crate::text::Vocabulary;

const FORMAT_VERSION: u32 = 1;
const MANIFEST: &str = "manifest.json";
const WEIGHTS: &str = "weights.bin";
const VOCABULARY: &str = "vocab.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AspectManifest {
    pub format_version: u32,
    pub backbone_id: String,
    /// Head order; must match the built-in aspect order on reload.
    pub aspect_order: Vec<AspectCategory>,
    pub threshold: f64,
    pub config: TrainConfigAspect,
    pub dims: AspectDims,
}

impl AspectSentimentModel {
    pub fn manifest(&self) -> AspectManifest {
        AspectManifest {
            format_version: FORMAT_VERSION,
            backbone_id: self.config.backbone.id().to_string(),
            aspect_order: AspectCategory::ALL.to_vec(),
            threshold: self.config.detection_threshold,
            config: self.config.clone(),
            dims: self.network.dims,
        }
    }

    /// Writes `manifest.json`, `vocab.json` and `weights.bin` into `dir`.
    pub fn save(&self, dir: &Path) -> Result<(), AspectModelError> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join(MANIFEST), serde_json::to_string_pretty(&self.manifest())?)?;
        fs::write(dir.join(VOCABULARY), serde_json::to_string(&self.vocabulary)?)?;
        write_weights(&dir.join(WEIGHTS), &self.network.flat_values())?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self, AspectModelError> {
        let incompatible = |msg: String| AspectModelError::IncompatibleCheckpoint(msg);
        let manifest: AspectManifest = serde_json::from_str(&fs::read_to_string(dir.join(MANIFEST))?)?;
        if manifest.format_version != FORMAT_VERSION {
            return Err(incompatible(format!("format version {}", manifest.format_version)));
        }
        if manifest.aspect_order != AspectCategory::ALL {
            return Err(incompatible("aspect order differs from this build".into()));
        }
        let vocabulary: Vocabulary = serde_json::from_str(&fs::read_to_string(dir.join(VOCABULARY))?)?;
        if vocabulary.len() != manifest.dims.vocab {
            return Err(incompatible("vocabulary size does not match the manifest".into()));
        }
        let mut config = manifest.config;
        config.detection_threshold = manifest.threshold;
        config.validate()?;
        let mut network = AspectNetwork::new(manifest.dims, &mut ChaCha8Rng::seed_from_u64(0));
        let weights = read_weights(&dir.join(WEIGHTS))?;
        if !network.load_flat_values(&weights) {
            return Err(incompatible(format!(
                "expected {} weights, found {}",
                network.num_parameters(),
                weights.len()
            )));
        }
        Ok(AspectSentimentModel {
            vocabulary,
            network,
            config,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::super::tests::tiny_model;
    use super::*;

    #[test]
    fn round_trip_reproduces_predictions() {
        let model = tiny_model(11);
        let dir = tempfile::tempdir().unwrap();
        model.save(dir.path()).unwrap();
        let back = AspectSentimentModel::load(dir.path()).unwrap();
        assert_eq!(back, model);
        let probe = "the proof is clear but the method is wrong";
        assert_eq!(back.predict(probe).unwrap(), model.predict(probe).unwrap());
    }

    #[test]
    fn rejects_mismatched_weights() {
        let model = tiny_model(11);
        let dir = tempfile::tempdir().unwrap();
        model.save(dir.path()).unwrap();
        write_weights(&dir.path().join(WEIGHTS), &[0.0; 3]).unwrap();
        assert!(matches!(
            AspectSentimentModel::load(dir.path()),
            Err(AspectModelError::IncompatibleCheckpoint(_))
        ));
    }
}
