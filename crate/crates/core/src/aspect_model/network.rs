use ndarray::{Array1, Array2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{AspectCategory, LabelSet, Sentiment};
use crate::nn::{
    bce_on_logit, bce_on_probability, dropout_mask, sigmoid, softmax, Embedding, Encoder,
    EncoderCache, EncoderKind, Linear, Param, Parameters,
};

pub(crate) const NUM_ASPECTS: usize = 8;
pub(crate) const NUM_SENTIMENT_ASPECTS: usize = 7;

/// Layer sizes of the aspect network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AspectDims {
    pub vocab: usize,
    pub embedding_dim: usize,
    pub backbone: EncoderKind,
    pub acd_hidden: usize,
    pub attention_dim: usize,
    pub acsa_hidden: usize,
    pub acsa_layers: usize,
    pub word_hidden: usize,
}

/// Attention over tokens plus a detection output for one aspect.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct AcdHead {
    attention: Linear,
    context: Param,
    output: Linear,
}

/// Shared embedding feeding an ACD encoder with per-aspect attention heads and an
/// ACSA encoder whose per-word sentiment is pooled by the same attention.
#[derive(Debug, Clone, PartialEq)]
pub struct AspectNetwork {
    pub dims: AspectDims,
    embedding: Embedding,
    acd_encoder: Encoder,
    acd_heads: Vec<AcdHead>,
    acsa_encoder: Encoder,
    word_layer: Linear,
    /// One `(word_hidden -> 1)` head per sentiment-bearing aspect.
    acsa_heads: Vec<Linear>,
}

/// Forward pass results for one token sequence.
#[derive(Debug, Clone)]
pub struct Forward {
    pub detection_logits: [f64; NUM_ASPECTS],
    /// Attention over tokens for each aspect, in aspect order.
    pub attention: Vec<Array1<f64>>,
    /// Positive-sentiment probability of each token for each sentiment-bearing aspect.
    pub word_sentiment: Vec<Array1<f64>>,
    /// Attention-weighted sentiment for each sentiment-bearing aspect.
    pub sentiment: [f64; NUM_SENTIMENT_ASPECTS],
    cache: Option<Cache>,
}

impl Forward {
    pub fn detection(&self) -> [f64; NUM_ASPECTS] {
        self.detection_logits.map(sigmoid)
    }
}

#[derive(Debug, Clone)]
struct Cache {
    ids: Vec<u32>,
    embedding_mask: Array2<f64>,
    acd_cache: EncoderCache,
    acd_states: Array2<f64>,
    attention_activations: Vec<Array2<f64>>,
    pooled: Vec<Array2<f64>>,
    acsa_cache: EncoderCache,
    acsa_mask: Array2<f64>,
    acsa_states: Array2<f64>,
    word_pre: Array2<f64>,
    word_mask: Array2<f64>,
    word_states: Array2<f64>,
}

/// `Σ_t attention[t] · word[t]`.
pub fn aggregate_sentiment(attention: &[f64], word_sentiment: &[f64]) -> f64 {
    attention.iter().zip(word_sentiment).map(|(a, w)| a * w).sum()
}

impl AspectNetwork {
    pub fn new<R: Rng + ?Sized>(dims: AspectDims, rng: &mut R) -> Self {
        let embedding = Embedding::new(dims.vocab, dims.embedding_dim, rng);
        let acd_encoder = Encoder::new(dims.backbone, dims.embedding_dim, dims.acd_hidden, 1, rng);
        let acd_width = acd_encoder.output_dim();
        let acd_heads = (0..NUM_ASPECTS)
            .map(|_| AcdHead {
                attention: Linear::new(acd_width, dims.attention_dim, rng),
                context: Param::uniform(1, dims.attention_dim, 1.0 / (dims.attention_dim as f64).sqrt(), rng),
                output: Linear::new(acd_width, 1, rng),
            })
            .collect();
        let acsa_encoder = Encoder::new(
            EncoderKind::BiLstm,
            dims.embedding_dim,
            dims.acsa_hidden,
            dims.acsa_layers,
            rng,
        );
        let word_layer = Linear::new(acsa_encoder.output_dim(), dims.word_hidden, rng);
        let acsa_heads = (0..NUM_SENTIMENT_ASPECTS)
            .map(|_| Linear::new(dims.word_hidden, 1, rng))
            .collect();
        AspectNetwork {
            dims,
            embedding,
            acd_encoder,
            acd_heads,
            acsa_encoder,
            word_layer,
            acsa_heads,
        }
    }

    /// Inference pass without dropout or cached activations.
    pub fn infer(&self, ids: &[u32]) -> Forward {
        self.run(ids, 0.0, None::<&mut rand::rngs::ThreadRng>, false)
    }

    /// Training pass with dropout; keeps the activations needed by [`AspectNetwork::backward`].
    pub fn forward_train<R: Rng + ?Sized>(&self, ids: &[u32], dropout: f64, rng: &mut R) -> Forward {
        self.run(ids, dropout, Some(rng), true)
    }

    fn run<R: Rng + ?Sized>(&self, ids: &[u32], dropout: f64, mut rng: Option<&mut R>, keep: bool) -> Forward {
        let len = ids.len();
        let mut mask = |shape: (usize, usize)| match rng.as_deref_mut() {
            Some(r) if dropout > 0.0 => dropout_mask(shape, dropout, r),
            _ => Array2::ones(shape),
        };
        let embedding_mask = mask((len, self.dims.embedding_dim));
        let embedded = self.embedding.forward(ids) * &embedding_mask;

        let (acd_states, acd_cache) = self.acd_encoder.forward(embedded.view());
        let mut detection_logits = [0.0; NUM_ASPECTS];
        let mut attention = Vec::with_capacity(NUM_ASPECTS);
        let mut attention_activations = Vec::with_capacity(NUM_ASPECTS);
        let mut pooled = Vec::with_capacity(NUM_ASPECTS);
        for (c, head) in self.acd_heads.iter().enumerate() {
            let activation = head.attention.forward(acd_states.view()).mapv(f64::tanh);
            let scores = activation.dot(&head.context.row_vector());
            let alpha = softmax(scores.view());
            let r = alpha.dot(&acd_states).insert_axis(Axis(0));
            detection_logits[c] = head.output.forward(r.view())[[0, 0]];
            attention.push(alpha);
            attention_activations.push(activation);
            pooled.push(r);
        }

        let (acsa_raw, acsa_cache) = self.acsa_encoder.forward(embedded.view());
        let acsa_mask = mask(acsa_raw.dim());
        let acsa_states = acsa_raw * &acsa_mask;
        let word_pre = self.word_layer.forward(acsa_states.view());
        let word_mask = mask(word_pre.dim());
        let word_states = word_pre.mapv(|v| v.max(0.0)) * &word_mask;
        let mut word_sentiment = Vec::with_capacity(NUM_SENTIMENT_ASPECTS);
        let mut sentiment = [0.0; NUM_SENTIMENT_ASPECTS];
        for (k, head) in self.acsa_heads.iter().enumerate() {
            let q = head.forward(word_states.view()).column(0).mapv(sigmoid);
            sentiment[k] = aggregate_sentiment(attention[k].as_slice().unwrap(), q.as_slice().unwrap());
            word_sentiment.push(q);
        }

        let cache = keep.then(|| Cache {
            ids: ids.to_vec(),
            embedding_mask,
            acd_cache,
            acd_states,
            attention_activations,
            pooled,
            acsa_cache,
            acsa_mask,
            acsa_states,
            word_pre,
            word_mask,
            word_states,
        });
        Forward {
            detection_logits,
            attention,
            word_sentiment,
            sentiment,
            cache,
        }
    }

    /// Joint loss against a gold label set and its derivatives with respect to the
    /// detection logits and the aggregated sentiments.
    pub fn loss(forward: &Forward, gold: &LabelSet) -> (f64, [f64; NUM_ASPECTS], [f64; NUM_SENTIMENT_ASPECTS]) {
        let mut loss = 0.0;
        let mut d_logits = [0.0; NUM_ASPECTS];
        let mut d_sentiment = [0.0; NUM_SENTIMENT_ASPECTS];
        for aspect in AspectCategory::ALL {
            let c = aspect.index();
            let target = if gold.contains(aspect) { 1.0 } else { 0.0 };
            let (l, d) = bce_on_logit(forward.detection_logits[c], target);
            loss += l;
            d_logits[c] = d;
            if let Some(sentiment) = gold.sentiment(aspect) {
                let target = if sentiment == Sentiment::Positive { 1.0 } else { 0.0 };
                let (l, d) = bce_on_probability(forward.sentiment[c], target);
                loss += l;
                d_sentiment[c] = d;
            }
        }
        (loss, d_logits, d_sentiment)
    }

    /// Accumulates parameter gradients for a cached training pass.
    pub fn backward(&mut self, forward: &Forward, d_logits: &[f64; NUM_ASPECTS], d_sentiment: &[f64; NUM_SENTIMENT_ASPECTS]) {
        let cache = forward.cache.as_ref().expect("backward needs a training forward pass");
        let len = cache.ids.len();
        let mut d_acd_states = Array2::<f64>::zeros(cache.acd_states.dim());
        let mut d_attention: Vec<Array1<f64>> = vec![Array1::zeros(len); NUM_ASPECTS];

        for (c, head) in self.acd_heads.iter_mut().enumerate() {
            let d_out = Array2::from_elem((1, 1), d_logits[c]);
            let d_r = head.output.backward(cache.pooled[c].view(), d_out.view());
            let d_r = d_r.row(0);
            d_attention[c] += &cache.acd_states.dot(&d_r);
            let alpha = forward.attention[c].view().insert_axis(Axis(1));
            d_acd_states += &alpha.dot(&d_r.insert_axis(Axis(0)));
        }

        let mut d_word_states = Array2::<f64>::zeros(cache.word_states.dim());
        for (k, head) in self.acsa_heads.iter_mut().enumerate() {
            let q = &forward.word_sentiment[k];
            let alpha = &forward.attention[k];
            d_attention[k] += &(q * d_sentiment[k]);
            let d_q_logit = alpha * d_sentiment[k] * &q.mapv(|v| v * (1.0 - v));
            let d_out = d_q_logit.insert_axis(Axis(1));
            d_word_states += &head.backward(cache.word_states.view(), d_out.view());
        }

        for (c, head) in self.acd_heads.iter_mut().enumerate() {
            let alpha = &forward.attention[c];
            let d_alpha = &d_attention[c];
            let d_scores = alpha * &(d_alpha - alpha.dot(d_alpha));
            let activation = &cache.attention_activations[c];
            head.context.grad += &d_scores.dot(activation).insert_axis(Axis(0));
            let d_activation = d_scores
                .insert_axis(Axis(1))
                .dot(&head.context.value);
            let d_pre = d_activation * &activation.mapv(|a| 1.0 - a * a);
            d_acd_states += &head.attention.backward(cache.acd_states.view(), d_pre.view());
        }

        let d_word_pre = d_word_states * &cache.word_mask * &cache.word_pre.mapv(|v| if v > 0.0 { 1.0 } else { 0.0 });
        let d_acsa_states = self.word_layer.backward(cache.acsa_states.view(), d_word_pre.view());
        let d_acsa_raw = d_acsa_states * &cache.acsa_mask;
        let mut d_embedded = self.acsa_encoder.backward(&cache.acsa_cache, d_acsa_raw.view());
        d_embedded += &self.acd_encoder.backward(&cache.acd_cache, d_acd_states.view());
        let d_table = d_embedded * &cache.embedding_mask;
        self.embedding.backward(&cache.ids, d_table.view());
    }

    #[cfg(test)]
    pub(crate) fn acsa_head_mut(&mut self, aspect_index: usize) -> &mut Linear {
        &mut self.acsa_heads[aspect_index]
    }
}

impl Parameters for AspectNetwork {
    fn params(&self) -> Vec<&Param> {
        let mut out = vec![&self.embedding.table];
        out.extend(self.acd_encoder.params());
        for head in &self.acd_heads {
            out.extend([
                &head.attention.weight,
                &head.attention.bias,
                &head.context,
                &head.output.weight,
                &head.output.bias,
            ]);
        }
        out.extend(self.acsa_encoder.params());
        out.extend([&self.word_layer.weight, &self.word_layer.bias]);
        for head in &self.acsa_heads {
            out.extend([&head.weight, &head.bias]);
        }
        out
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        let mut out = vec![&mut self.embedding.table];
        out.extend(self.acd_encoder.params_mut());
        for head in &mut self.acd_heads {
            out.extend([
                &mut head.attention.weight,
                &mut head.attention.bias,
                &mut head.context,
                &mut head.output.weight,
                &mut head.output.bias,
            ]);
        }
        out.extend(self.acsa_encoder.params_mut());
        out.extend([&mut self.word_layer.weight, &mut self.word_layer.bias]);
        for head in &mut self.acsa_heads {
            out.extend([&mut head.weight, &mut head.bias]);
        }
        out
    }
}
