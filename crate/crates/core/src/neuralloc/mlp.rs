//! Fully connected ReLU network with inverted dropout and exact backprop.
//!
//! Weights of layer `l` are stored `out x in`, so a batch of row vectors `A`
//! maps to `A W^T + b`. Dropout masks hold `0` or `1 / (1 - p)` and are
//! applied to hidden activations after the ReLU.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{rng_from_seed, SimRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Adam,
    Sgd,
}

impl std::str::FromStr for OptimizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "adam" => Ok(Self::Adam),
            "sgd" => Ok(Self::Sgd),
            other => Err(Error::Input(format!("unknown optimizer {other:?}"))),
        }
    }
}

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpConfig {
    pub input_dim: usize,
    pub hidden: Vec<usize>,
    pub output_dim: usize,
    pub dropout: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub optimizer: OptimizerKind,
    pub seed: u64,
}

pub const DEFAULT_HIDDEN: [usize; 3] = [300, 200, 50];
pub const DEFAULT_EPOCHS: usize = 50;
/// Dropout is opt-in; at desk scale p = 0.2 underfits to a near-constant predictor.
pub const DEFAULT_DROPOUT: f64 = 0.0;

impl MlpConfig {
    /// Three hidden layers of 300/200/50, two outputs, 50 epochs of Adam.
    pub fn new(input_dim: usize) -> Self {
        Self {
            input_dim,
            hidden: DEFAULT_HIDDEN.to_vec(),
            output_dim: 2,
            dropout: DEFAULT_DROPOUT,
            epochs: DEFAULT_EPOCHS,
            batch_size: 32,
            learning_rate: 1e-3,
            optimizer: OptimizerKind::Adam,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.output_dim == 0 || self.hidden.contains(&0) {
            return Err(Error::Input("all layer dimensions must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Input(format!(
                "dropout must lie in [0, 1), got {}",
                self.dropout
            )));
        }
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::Input("epochs and batch size must be >= 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Input(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        Ok(())
    }

    /// `[input, hidden..., output]`.
    pub fn layer_dims(&self) -> Vec<usize> {
        std::iter::once(self.input_dim)
            .chain(self.hidden.iter().copied())
            .chain(std::iter::once(self.output_dim))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Layer {
    pub fn zeros(input: usize, output: usize) -> Self {
        Self {
            weights: Array2::zeros((output, input)),
            bias: Array1::zeros(output),
        }
    }

    pub fn in_dim(&self) -> usize {
        self.weights.ncols()
    }

    pub fn out_dim(&self) -> usize {
        self.weights.nrows()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mode {
    Train { dropout_seed: u64 },
    Infer,
}

/// Activations recorded by a forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// Input to each layer, `batch x in_dim`.
    inputs: Vec<Array2<f64>>,
    /// ReLU pre-activations of hidden layers.
    pre: Vec<Array2<f64>>,
    /// Scaled dropout masks of hidden layers (Train mode with `p > 0`).
    masks: Vec<Option<Array2<f64>>>,
    output: Array2<f64>,
}

impl ForwardCache {
    pub fn output(&self) -> &Array2<f64> {
        &self.output
    }

    /// Activation fed to the output layer.
    pub fn last_hidden(&self) -> &Array2<f64> {
        self.inputs.last().expect("at least one layer")
    }

    pub fn masks(&self) -> &[Option<Array2<f64>>] {
        &self.masks
    }
}

/// Parameter gradients, one `(dW, db)` per layer.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<Layer>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    layers: Vec<Layer>,
    dropout: f64,
}

impl Mlp {
    pub fn from_layers(layers: Vec<Layer>, dropout: f64) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::shape("network needs at least one layer"));
        }
        for (i, w) in layers.windows(2).enumerate() {
            if w[0].out_dim() != w[1].in_dim() {
                return Err(Error::shape(format!(
                    "layer {i} outputs {} but layer {} expects {}",
                    w[0].out_dim(),
                    i + 1,
                    w[1].in_dim()
                )));
            }
        }
        for (i, l) in layers.iter().enumerate() {
            if l.bias.len() != l.out_dim() {
                return Err(Error::shape(format!("layer {i} bias length mismatch")));
            }
        }
        if !(0.0..1.0).contains(&dropout) {
            return Err(Error::Input(format!("dropout must lie in [0, 1), got {dropout}")));
        }
        Ok(Self { layers, dropout })
    }

    pub fn zeros(dims: &[usize], dropout: f64) -> Result<Self> {
        if dims.len() < 2 {
            return Err(Error::shape("need at least input and output dimensions"));
        }
        Self::from_layers(
            dims.windows(2).map(|w| Layer::zeros(w[0], w[1])).collect(),
            dropout,
        )
    }

    /// He-uniform weights `U(-sqrt(6 / fan_in), sqrt(6 / fan_in))`, zero biases.
    pub fn he_uniform(dims: &[usize], dropout: f64, seed: u64) -> Result<Self> {
        let mut net = Self::zeros(dims, dropout)?;
        let mut rng = rng_from_seed(seed);
        for layer in &mut net.layers {
            let limit = (6.0 / layer.in_dim() as f64).sqrt();
            layer
                .weights
                .mapv_inplace(|_| rng.random_range(-limit..limit));
        }
        Ok(net)
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn dropout(&self) -> f64 {
        self.dropout
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().expect("non-empty").out_dim()
    }

    pub fn dims(&self) -> Vec<usize> {
        std::iter::once(self.input_dim())
            .chain(self.layers.iter().map(Layer::out_dim))
            .collect()
    }

    pub fn num_params(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.bias.len())
            .sum()
    }

    /// Forward pass of a single input vector.
    pub fn forward(&self, input: &[f64], mode: Mode) -> Result<(Vec<f64>, ForwardCache)> {
        let x = ArrayView2::from_shape((1, input.len()), input)
            .map_err(|e| Error::shape(e.to_string()))?;
        let cache = self.forward_batch(x, mode)?;
        Ok((cache.output.row(0).to_vec(), cache))
    }

    /// Forward pass of a batch, one sample per row.
    pub fn forward_batch(&self, x: ArrayView2<f64>, mode: Mode) -> Result<ForwardCache> {
        if x.ncols() != self.input_dim() {
            return Err(Error::shape(format!(
                "input has {} features, network expects {}",
                x.ncols(),
                self.input_dim()
            )));
        }
        let mut rng: Option<SimRng> = match mode {
            Mode::Train { dropout_seed } if self.dropout > 0.0 => Some(rng_from_seed(dropout_seed)),
            _ => None,
        };
        let keep = 1.0 - self.dropout;
        let n_hidden = self.layers.len() - 1;
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre = Vec::with_capacity(n_hidden);
        let mut masks = Vec::with_capacity(n_hidden);
        let mut a = x.to_owned();
        for (i, layer) in self.layers.iter().enumerate() {
            let mut z = a.dot(&layer.weights.t());
            z += &layer.bias;
            inputs.push(a);
            if i == n_hidden {
                return Ok(ForwardCache {
                    inputs,
                    pre,
                    masks,
                    output: z,
                });
            }
            // `v < 0` rather than `max` so NaN propagates and divergence is caught.
            let mut h = z.mapv(|v| if v < 0.0 { 0.0 } else { v });
            let mask = rng.as_mut().map(|rng| {
                Array2::from_shape_fn(h.raw_dim(), |_| {
                    if rng.random::<f64>() < keep {
                        1.0 / keep
                    } else {
                        0.0
                    }
                })
            });
            if let Some(m) = &mask {
                h *= m;
            }
            pre.push(z);
            masks.push(mask);
            a = h;
        }
        unreachable!("loop returns at the output layer")
    }

    /// Gradients of the batch-mean Euclidean loss; returns `(loss, grads)`.
    pub fn backward(&self, cache: &ForwardCache, labels: ArrayView2<f64>) -> Result<(f64, Gradients)> {
        if cache.inputs.len() != self.layers.len() {
            return Err(Error::shape("cache was produced by a different network"));
        }
        for (a, l) in cache.inputs.iter().zip(&self.layers) {
            if a.ncols() != l.in_dim() {
                return Err(Error::shape("cache activations do not match layer widths"));
            }
        }
        if labels.dim() != cache.output.dim() {
            return Err(Error::shape(format!(
                "labels {:?} do not match outputs {:?}",
                labels.dim(),
                cache.output.dim()
            )));
        }
        let batch = labels.nrows() as f64;
        let mut loss = 0.0;
        let mut delta = Array2::<f64>::zeros(cache.output.raw_dim());
        for ((pred, label), mut d) in cache
            .output
            .rows()
            .into_iter()
            .zip(labels.rows())
            .zip(delta.rows_mut())
        {
            let pred = pred.as_slice().expect("contiguous");
            let label = label.to_vec();
            loss += euclidean_loss(pred, &label);
            let g = euclidean_loss_grad(pred, &label);
            for (dst, v) in d.iter_mut().zip(g) {
                *dst = v / batch;
            }
        }
        loss /= batch;

        let mut grads: Vec<Layer> = Vec::with_capacity(self.layers.len());
        for i in (0..self.layers.len()).rev() {
            let layer = &self.layers[i];
            let gw = delta.t().dot(&cache.inputs[i]);
            let gb = delta.sum_axis(Axis(0));
            grads.push(Layer {
                weights: gw,
                bias: gb,
            });
            if i > 0 {
                let mut prev = delta.dot(&layer.weights);
                prev.zip_mut_with(&cache.pre[i - 1], |d, &z| {
                    if z <= 0.0 {
                        *d = 0.0
                    }
                });
                if let Some(mask) = &cache.masks[i - 1] {
                    prev *= mask;
                }
                delta = prev;
            }
        }
        grads.reverse();
        Ok((loss, Gradients { layers: grads }))
    }
}

/// Euclidean distance between prediction and label.
pub fn euclidean_loss(pred: &[f64], label: &[f64]) -> f64 {
    pred.iter()
        .zip(label)
        .map(|(p, l)| (p - l) * (p - l))
        .sum::<f64>()
        .sqrt()
}

/// Gradient of [`euclidean_loss`] w.r.t. the prediction; zero at zero distance.
pub fn euclidean_loss_grad(pred: &[f64], label: &[f64]) -> Vec<f64> {
    let d = euclidean_loss(pred, label);
    if d == 0.0 {
        return vec![0.0; pred.len()];
    }
    pred.iter().zip(label).map(|(p, l)| (p - l) / d).collect()
}
