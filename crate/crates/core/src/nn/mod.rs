//! Small dense layers with hand-written backward passes, shared by the aspect
//! and disagreement networks. Everything is `f64` and single-sequence: a
//! sequence is an `(tokens, features)` matrix, gradients accumulate into
//! [`Param::grad`] until [`Adam::step`] consumes them.

mod layers;
mod optim;
mod weights;

pub use layers::{Embedding, Encoder, EncoderCache, EncoderKind, Linear, Lstm, LstmCache};
pub use optim::Adam;
pub use weights::{read_weights, write_weights};

use ndarray::{Array1, Array2, ArrayView1};
use rand::Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub value: Array2<f64>,
    pub grad: Array2<f64>,
}

impl Param {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Param {
            value: Array2::zeros((rows, cols)),
            grad: Array2::zeros((rows, cols)),
        }
    }

    /// Uniform in `[-scale, scale]`.
    pub fn uniform<R: Rng + ?Sized>(rows: usize, cols: usize, scale: f64, rng: &mut R) -> Self {
        let value = Array2::from_shape_fn((rows, cols), |_| rng.gen_range(-scale..=scale));
        Param {
            grad: Array2::zeros((rows, cols)),
            value,
        }
    }

    pub fn zero_grad(&mut self) {
        self.grad.fill(0.0);
    }

    pub fn len(&self) -> usize {
        self.value.len()
    }

    pub fn is_empty(&self) -> bool {
        self.value.is_empty()
    }

    pub(crate) fn row_vector(&self) -> ArrayView1<'_, f64> {
        self.value.row(0)
    }
}

/// Access to every trainable tensor of a model, always in the same order.
pub trait Parameters {
    fn params(&self) -> Vec<&Param>;
    fn params_mut(&mut self) -> Vec<&mut Param>;

    fn zero_grad(&mut self) {
        for p in self.params_mut() {
            p.zero_grad();
        }
    }

    fn num_parameters(&self) -> usize {
        self.params().iter().map(|p| p.len()).sum()
    }

    fn scale_grad(&mut self, factor: f64) {
        for p in self.params_mut() {
            p.grad *= factor;
        }
    }

    /// All values concatenated in parameter order.
    fn flat_values(&self) -> Vec<f64> {
        self.params()
            .iter()
            .flat_map(|p| p.value.iter().copied())
            .collect()
    }

    /// Inverse of [`Parameters::flat_values`]. Returns false on a length mismatch.
    fn load_flat_values(&mut self, values: &[f64]) -> bool {
        if values.len() != self.num_parameters() {
            return false;
        }
        let mut offset = 0;
        for p in self.params_mut() {
            let n = p.len();
            for (dst, src) in p.value.iter_mut().zip(&values[offset..offset + n]) {
                *dst = *src;
            }
            offset += n;
        }
        true
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Numerically stable softmax of a vector.
pub fn softmax(x: ArrayView1<'_, f64>) -> Array1<f64> {
    let max = x.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
    let exp = x.mapv(|v| (v - max).exp());
    let sum = exp.sum();
    exp / sum
}

/// Inverted-dropout mask: entries are 0 or `1 / (1 - p)`.
pub fn dropout_mask<R: Rng + ?Sized>(shape: (usize, usize), p: f64, rng: &mut R) -> Array2<f64> {
    if p <= 0.0 {
        return Array2::ones(shape);
    }
    let keep = 1.0 - p;
    Array2::from_shape_fn(shape, |_| if rng.gen::<f64>() < keep { 1.0 / keep } else { 0.0 })
}

/// Binary cross-entropy on a probability, clamped away from 0 and 1.
/// Returns the loss and its derivative with respect to the probability.
pub fn bce_on_probability(p: f64, target: f64) -> (f64, f64) {
    const EPS: f64 = 1e-12;
    let p = p.clamp(EPS, 1.0 - EPS);
    let loss = -(target * p.ln() + (1.0 - target) * (1.0 - p).ln());
    let grad = (p - target) / (p * (1.0 - p));
    (loss, grad)
}

/// Binary cross-entropy on a logit. Returns the loss and its derivative with respect to the logit.
pub fn bce_on_logit(logit: f64, target: f64) -> (f64, f64) {
    // log(1 + e^x) computed stably
    let softplus = if logit > 0.0 {
        logit + (-logit).exp().ln_1p()
    } else {
        logit.exp().ln_1p()
    };
    let loss = softplus - target * logit;
    (loss, sigmoid(logit) - target)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn softmax_sums_to_one_for_large_inputs() {
        let s = softmax(array![1000.0, 1001.0, 999.0].view());
        assert!((s.sum() - 1.0).abs() < 1e-12);
        assert!(s[1] > s[0] && s[0] > s[2]);
    }

    #[test]
    fn bce_forms_agree() {
        for &(logit, y) in &[(0.3, 1.0), (-2.0, 0.0), (4.0, 0.0)] {
            let (a, ga) = bce_on_logit(logit, y);
            let p = sigmoid(logit);
            let (b, gp) = bce_on_probability(p, y);
            assert!((a - b).abs() < 1e-9);
            assert!((ga - gp * p * (1.0 - p)).abs() < 1e-9);
        }
    }
}
