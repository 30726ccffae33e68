use ndarray::{concatenate, s, Array1, Array2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::PairEncoding;
use crate::nn::{dropout_mask, softmax, Embedding, Encoder, EncoderCache, EncoderKind, Linear, Param, Parameters};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairDims {
    pub vocab: usize,
    pub embedding_dim: usize,
    pub hidden_dim: usize,
    pub feature_dim: usize,
    pub classes: usize,
}

/// Token plus segment embeddings, a BiLSTM, mean pooling of each segment into
/// `u` and `v`, and an MLP over `[u, v, |u - v|, u * v]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairNetwork {
    pub dims: PairDims,
    embedding: Embedding,
    segment: Param,
    encoder: Encoder,
    hidden: Linear,
    output: Linear,
}

#[derive(Debug, Clone)]
pub struct PairForward {
    pub probabilities: Array1<f64>,
    cache: Option<PairCache>,
}

#[derive(Debug, Clone)]
struct PairCache {
    input_mask: Array2<f64>,
    encoder_cache: EncoderCache,
    u: Array1<f64>,
    v: Array1<f64>,
    features: Array2<f64>,
    hidden_pre: Array2<f64>,
    hidden_mask: Array2<f64>,
    hidden: Array2<f64>,
}

impl PairNetwork {
    pub fn new<R: Rng + ?Sized>(dims: PairDims, rng: &mut R) -> Self {
        let encoder = Encoder::new(EncoderKind::BiLstm, dims.embedding_dim, dims.hidden_dim, 1, rng);
        let width = encoder.output_dim();
        PairNetwork {
            dims,
            embedding: Embedding::new(dims.vocab, dims.embedding_dim, rng),
            segment: Param::uniform(2, dims.embedding_dim, 0.5, rng),
            hidden: Linear::new(4 * width, dims.feature_dim, rng),
            output: Linear::new(dims.feature_dim, dims.classes, rng),
            encoder,
        }
    }

    pub fn infer(&self, input: &PairEncoding) -> PairForward {
        self.run(input, 0.0, None::<&mut rand::rngs::ThreadRng>, false)
    }

    pub fn forward_train<R: Rng + ?Sized>(&self, input: &PairEncoding, dropout: f64, rng: &mut R) -> PairForward {
        self.run(input, dropout, Some(rng), true)
    }

    fn run<R: Rng + ?Sized>(&self, input: &PairEncoding, dropout: f64, mut rng: Option<&mut R>, keep: bool) -> PairForward {
        let mut mask = |shape: (usize, usize)| match rng.as_deref_mut() {
            Some(r) if dropout > 0.0 => dropout_mask(shape, dropout, r),
            _ => Array2::ones(shape),
        };
        let mut x = self.embedding.forward(&input.ids);
        for (t, &seg) in input.segments.iter().enumerate() {
            let mut row = x.row_mut(t);
            row += &self.segment.value.row(seg as usize);
        }
        let input_mask = mask(x.dim());
        let x = x * &input_mask;
        let (states, encoder_cache) = self.encoder.forward(x.view());
        let u = states.slice(s![input.range_a(), ..]).mean_axis(Axis(0)).expect("segment a is non-empty");
        let v = states.slice(s![input.range_b(), ..]).mean_axis(Axis(0)).expect("segment b is non-empty");
        let diff = (&u - &v).mapv(f64::abs);
        let prod = &u * &v;
        let features = concatenate(Axis(0), &[u.view(), v.view(), diff.view(), prod.view()])
            .expect("equal widths")
            .insert_axis(Axis(0));
        let hidden_pre = self.hidden.forward(features.view());
        let hidden_mask = mask(hidden_pre.dim());
        let hidden = hidden_pre.mapv(|h| h.max(0.0)) * &hidden_mask;
        let logits = self.output.forward(hidden.view());
        let probabilities = softmax(logits.row(0));
        let cache = keep.then(|| PairCache {
            input_mask,
            encoder_cache,
            u,
            v,
            features,
            hidden_pre,
            hidden_mask,
            hidden,
        });
        PairForward { probabilities, cache }
    }

    /// Cross-entropy against a class index and its gradient with respect to the logits.
    pub fn loss(forward: &PairForward, target: usize) -> (f64, Array1<f64>) {
        let p = &forward.probabilities;
        let loss = -p[target].max(1e-300).ln();
        let mut d = p.clone();
        d[target] -= 1.0;
        (loss, d)
    }

    pub fn backward(&mut self, input: &PairEncoding, forward: &PairForward, d_logits: &Array1<f64>) {
        let cache = forward.cache.as_ref().expect("backward needs a training forward pass");
        let d_logits = d_logits.view().insert_axis(Axis(0));
        let d_hidden = self.output.backward(cache.hidden.view(), d_logits);
        let d_pre = d_hidden * &cache.hidden_mask * &cache.hidden_pre.mapv(|h| if h > 0.0 { 1.0 } else { 0.0 });
        let d_features = self.hidden.backward(cache.features.view(), d_pre.view());
        let d_features = d_features.row(0);
        let w = cache.u.len();
        let d_diff = d_features.slice(s![2 * w..3 * w]);
        let d_prod = d_features.slice(s![3 * w..]);
        let sign = (&cache.u - &cache.v).mapv(|x| if x > 0.0 { 1.0 } else if x < 0.0 { -1.0 } else { 0.0 });
        let d_u = &d_features.slice(s![..w]) + &(&sign * &d_diff) + &(&cache.v * &d_prod);
        let d_v = &d_features.slice(s![w..2 * w]) - &(&sign * &d_diff) + &(&cache.u * &d_prod);

        let mut d_states = Array2::<f64>::zeros((input.len(), w));
        let d_u = d_u / input.len_a as f64;
        let d_v = d_v / input.len_b as f64;
        for t in input.range_a() {
            d_states.row_mut(t).assign(&d_u);
        }
        for t in input.range_b() {
            d_states.row_mut(t).assign(&d_v);
        }
        let d_x = self.encoder.backward(&cache.encoder_cache, d_states.view()) * &cache.input_mask;
        self.embedding.backward(&input.ids, d_x.view());
        for (t, &seg) in input.segments.iter().enumerate() {
            let mut row = self.segment.grad.row_mut(seg as usize);
            row += &d_x.row(t);
        }
    }
}

impl Parameters for PairNetwork {
    fn params(&self) -> Vec<&Param> {
        let mut out = vec![&self.embedding.table, &self.segment];
        out.extend(self.encoder.params());
        out.extend([&self.hidden.weight, &self.hidden.bias, &self.output.weight, &self.output.bias]);
        out
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        let mut out = vec![&mut self.embedding.table, &mut self.segment];
        out.extend(self.encoder.params_mut());
        out.extend([
            &mut self.hidden.weight,
            &mut self.hidden.bias,
            &mut self.output.weight,
            &mut self.output.bias,
        ]);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn input() -> PairEncoding {
        PairEncoding {
            ids: vec![2, 5, 6, 3, 7, 5, 8, 3],
            segments: vec![0, 0, 0, 0, 1, 1, 1, 1],
            len_a: 2,
            len_b: 3,
            truncated_a: 0,
            truncated_b: 0,
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let dims = PairDims {
            vocab: 10,
            embedding_dim: 4,
            hidden_dim: 3,
            feature_dim: 5,
            classes: 2,
        };
        let mut net = PairNetwork::new(dims, &mut ChaCha8Rng::seed_from_u64(1));
        let x = input();
        let loss_of = |net: &PairNetwork| PairNetwork::loss(&net.run(&x, 0.0, None::<&mut ChaCha8Rng>, true), 1).0;
        let f = net.run(&x, 0.0, None::<&mut ChaCha8Rng>, true);
        let (_, d) = PairNetwork::loss(&f, 1);
        net.zero_grad();
        net.backward(&x, &f, &d);
        let analytic: Vec<f64> = net.params().iter().flat_map(|p| p.grad.iter().copied()).collect();
        let base = net.flat_values();
        let h = 1e-5;
        let mut worst: f64 = 0.0;
        for i in 0..base.len() {
            let mut probe = net.clone();
            let mut v = base.clone();
            v[i] += h;
            probe.load_flat_values(&v);
            let up = loss_of(&probe);
            v[i] -= 2.0 * h;
            probe.load_flat_values(&v);
            let down = loss_of(&probe);
            let numeric = (up - down) / (2.0 * h);
            let denom = numeric.abs().max(analytic[i].abs()).max(1e-6);
            worst = worst.max((numeric - analytic[i]).abs() / denom);
        }
        assert!(worst < 1e-4, "worst relative error {worst}");
    }

    #[test]
    fn probabilities_form_a_distribution() {
        let dims = PairDims {
            vocab: 10,
            embedding_dim: 4,
            hidden_dim: 3,
            feature_dim: 5,
            classes: 3,
        };
        let net = PairNetwork::new(dims, &mut ChaCha8Rng::seed_from_u64(2));
        let p = net.infer(&input()).probabilities;
        assert_eq!(p.len(), 3);
        assert!((p.sum() - 1.0).abs() < 1e-12);
        assert_eq!(net.infer(&input()).probabilities, p);
    }
}
