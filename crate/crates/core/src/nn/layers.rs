use ndarray::{s, Array1, Array2, ArrayView2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{sigmoid, Param};

/// Token lookup table.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    pub table: Param,
}

impl Embedding {
    pub fn new<R: Rng + ?Sized>(vocab: usize, dim: usize, rng: &mut R) -> Self {
        Embedding {
            table: Param::uniform(vocab, dim, 0.5, rng),
        }
    }

    pub fn dim(&self) -> usize {
        self.table.value.ncols()
    }

    pub fn forward(&self, ids: &[u32]) -> Array2<f64> {
        let mut out = Array2::zeros((ids.len(), self.dim()));
        for (t, &id) in ids.iter().enumerate() {
            out.row_mut(t).assign(&self.table.value.row(id as usize));
        }
        out
    }

    pub fn backward(&mut self, ids: &[u32], d_out: ArrayView2<'_, f64>) {
        for (t, &id) in ids.iter().enumerate() {
            let mut row = self.table.grad.row_mut(id as usize);
            row += &d_out.row(t);
        }
    }
}

/// `y = x W^T + b`, applied row-wise.
#[derive(Debug, Clone, PartialEq)]
pub struct Linear {
    pub weight: Param,
    pub bias: Param,
}

impl Linear {
    pub fn new<R: Rng + ?Sized>(input: usize, output: usize, rng: &mut R) -> Self {
        let scale = 1.0 / (input.max(1) as f64).sqrt();
        Linear {
            weight: Param::uniform(output, input, scale, rng),
            bias: Param::uniform(1, output, scale, rng),
        }
    }

    pub fn forward(&self, x: ArrayView2<'_, f64>) -> Array2<f64> {
        x.dot(&self.weight.value.t()) + &self.bias.value
    }

    /// Accumulates parameter gradients and returns the gradient with respect to `x`.
    pub fn backward(&mut self, x: ArrayView2<'_, f64>, d_out: ArrayView2<'_, f64>) -> Array2<f64> {
        self.weight.grad += &d_out.t().dot(&x);
        self.bias.grad += &d_out.sum_axis(Axis(0)).insert_axis(Axis(0));
        d_out.dot(&self.weight.value)
    }
}

/// Single-direction LSTM with gate order input, forget, cell, output.
#[derive(Debug, Clone, PartialEq)]
pub struct Lstm {
    pub w_input: Param,
    pub w_hidden: Param,
    pub bias: Param,
    pub reverse: bool,
}

/// Activations kept from the forward pass for backpropagation through time.
#[derive(Debug, Clone)]
pub struct LstmCache {
    input: Array2<f64>,
    hidden: Array2<f64>,
    cell: Array2<f64>,
    /// Post-activation gates `[i, f, g, o]` per step.
    gates: Array2<f64>,
}

impl Lstm {
    pub fn new<R: Rng + ?Sized>(input: usize, hidden: usize, reverse: bool, rng: &mut R) -> Self {
        let scale = 1.0 / (hidden.max(1) as f64).sqrt();
        let mut bias = Param::uniform(1, 4 * hidden, scale, rng);
        // forget gate starts open
        bias.value.slice_mut(s![0, hidden..2 * hidden]).fill(1.0);
        Lstm {
            w_input: Param::uniform(4 * hidden, input, scale, rng),
            w_hidden: Param::uniform(4 * hidden, hidden, scale, rng),
            bias,
            reverse,
        }
    }

    pub fn hidden_size(&self) -> usize {
        self.w_hidden.value.ncols()
    }

    fn order(&self, len: usize) -> Vec<usize> {
        if self.reverse {
            (0..len).rev().collect()
        } else {
            (0..len).collect()
        }
    }

    /// Output row `t` is the hidden state after reading position `t`.
    pub fn forward(&self, x: ArrayView2<'_, f64>) -> (Array2<f64>, LstmCache) {
        let len = x.nrows();
        let h = self.hidden_size();
        let projected = x.dot(&self.w_input.value.t()) + &self.bias.value;
        let mut hidden = Array2::zeros((len, h));
        let mut cell = Array2::zeros((len, h));
        let mut gates = Array2::zeros((len, 4 * h));
        let mut h_prev = Array1::zeros(h);
        let mut c_prev = Array1::zeros(h);
        for t in self.order(len) {
            let z = &projected.row(t) + &self.w_hidden.value.dot(&h_prev);
            let mut g = gates.row_mut(t);
            for k in 0..h {
                g[k] = sigmoid(z[k]);
                g[h + k] = sigmoid(z[h + k]);
                g[2 * h + k] = z[2 * h + k].tanh();
                g[3 * h + k] = sigmoid(z[3 * h + k]);
            }
            let mut c_t = Array1::<f64>::zeros(h);
            let mut h_t = Array1::<f64>::zeros(h);
            for k in 0..h {
                c_t[k] = g[h + k] * c_prev[k] + g[k] * g[2 * h + k];
                h_t[k] = g[3 * h + k] * c_t[k].tanh();
            }
            cell.row_mut(t).assign(&c_t);
            hidden.row_mut(t).assign(&h_t);
            h_prev = h_t;
            c_prev = c_t;
        }
        let cache = LstmCache {
            input: x.to_owned(),
            hidden: hidden.clone(),
            cell,
            gates,
        };
        (hidden, cache)
    }

    pub fn backward(&mut self, cache: &LstmCache, d_hidden: ArrayView2<'_, f64>) -> Array2<f64> {
        let len = cache.input.nrows();
        let h = self.hidden_size();
        let mut d_z = Array2::<f64>::zeros((len, 4 * h));
        let mut prev_hidden = Array2::<f64>::zeros((len, h));
        let mut dh_next = Array1::<f64>::zeros(h);
        let mut dc_next = Array1::<f64>::zeros(h);
        let order = self.order(len);
        for (step, &t) in order.iter().enumerate().rev() {
            let prev = if step == 0 { None } else { Some(order[step - 1]) };
            let c_prev = prev.map(|p| cache.cell.row(p).to_owned()).unwrap_or_else(|| Array1::zeros(h));
            if let Some(p) = prev {
                prev_hidden.row_mut(t).assign(&cache.hidden.row(p));
            }
            let g = cache.gates.row(t);
            let dh = &d_hidden.row(t) + &dh_next;
            let mut dz = d_z.row_mut(t);
            let mut dc_carry = Array1::zeros(h);
            for k in 0..h {
                let (i, f, gg, o) = (g[k], g[h + k], g[2 * h + k], g[3 * h + k]);
                let tanh_c = cache.cell[[t, k]].tanh();
                let d_o = dh[k] * tanh_c;
                let dc = dh[k] * o * (1.0 - tanh_c * tanh_c) + dc_next[k];
                dz[k] = dc * gg * i * (1.0 - i);
                dz[h + k] = dc * c_prev[k] * f * (1.0 - f);
                dz[2 * h + k] = dc * i * (1.0 - gg * gg);
                dz[3 * h + k] = d_o * o * (1.0 - o);
                dc_carry[k] = dc * f;
            }
            dh_next = self.w_hidden.value.t().dot(&dz);
            dc_next = dc_carry;
        }
        self.w_input.grad += &d_z.t().dot(&cache.input);
        self.w_hidden.grad += &d_z.t().dot(&prev_hidden);
        self.bias.grad += &d_z.sum_axis(Axis(0)).insert_axis(Axis(0));
        d_z.dot(&self.w_input.value)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EncoderKind {
    /// Stacked left-to-right LSTM.
    Lstm,
    /// Stacked bidirectional LSTM, directions concatenated per layer.
    BiLstm,
}

impl EncoderKind {
    pub fn id(self) -> &'static str {
        match self {
            EncoderKind::Lstm => "lstm",
            EncoderKind::BiLstm => "bilstm",
        }
    }

    pub fn from_id(id: &str) -> Option<EncoderKind> {
        match id {
            "lstm" => Some(EncoderKind::Lstm),
            "bilstm" => Some(EncoderKind::BiLstm),
            _ => None,
        }
    }
}

/// A stack of recurrent layers producing one contextual vector per token.
#[derive(Debug, Clone, PartialEq)]
pub struct Encoder {
    pub kind: EncoderKind,
    /// One entry per layer; bidirectional layers hold `[forward, backward]`.
    pub layers: Vec<Vec<Lstm>>,
}

#[derive(Debug, Clone)]
pub struct EncoderCache {
    layers: Vec<Vec<LstmCache>>,
}

impl Encoder {
    pub fn new<R: Rng + ?Sized>(kind: EncoderKind, input: usize, hidden: usize, depth: usize, rng: &mut R) -> Self {
        let mut layers = Vec::with_capacity(depth);
        let mut width = input;
        for _ in 0..depth.max(1) {
            let layer = match kind {
                EncoderKind::Lstm => vec![Lstm::new(width, hidden, false, rng)],
                EncoderKind::BiLstm => vec![
                    Lstm::new(width, hidden, false, rng),
                    Lstm::new(width, hidden, true, rng),
                ],
            };
            width = hidden * layer.len();
            layers.push(layer);
        }
        Encoder { kind, layers }
    }

    pub fn output_dim(&self) -> usize {
        let last = self.layers.last().expect("at least one layer");
        last.iter().map(Lstm::hidden_size).sum()
    }

    pub fn forward(&self, x: ArrayView2<'_, f64>) -> (Array2<f64>, EncoderCache) {
        let mut current = x.to_owned();
        let mut caches = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let mut outputs = Vec::with_capacity(layer.len());
            let mut layer_caches = Vec::with_capacity(layer.len());
            for lstm in layer {
                let (out, cache) = lstm.forward(current.view());
                outputs.push(out);
                layer_caches.push(cache);
            }
            let views: Vec<_> = outputs.iter().map(|o| o.view()).collect();
            current = ndarray::concatenate(Axis(1), &views).expect("equal lengths");
            caches.push(layer_caches);
        }
        (current, EncoderCache { layers: caches })
    }

    pub fn backward(&mut self, cache: &EncoderCache, d_out: ArrayView2<'_, f64>) -> Array2<f64> {
        let mut grad = d_out.to_owned();
        for (layer, caches) in self.layers.iter_mut().zip(&cache.layers).rev() {
            let mut d_input: Option<Array2<f64>> = None;
            let mut offset = 0;
            for (lstm, c) in layer.iter_mut().zip(caches) {
                let h = lstm.hidden_size();
                let dx = lstm.backward(c, grad.slice(s![.., offset..offset + h]));
                offset += h;
                d_input = Some(match d_input {
                    None => dx,
                    Some(acc) => acc + dx,
                });
            }
            grad = d_input.expect("layer has at least one direction");
        }
        grad
    }

    pub fn params(&self) -> Vec<&Param> {
        self.layers
            .iter()
            .flatten()
            .flat_map(|l| [&l.w_input, &l.w_hidden, &l.bias])
            .collect()
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        self.layers
            .iter_mut()
            .flatten()
            .flat_map(|l| [&mut l.w_input, &mut l.w_hidden, &mut l.bias])
            .collect()
    }
}
