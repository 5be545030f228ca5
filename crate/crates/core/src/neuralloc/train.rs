use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};
use rand::seq::SliceRandom;

use super::mlp::{Gradients, Layer, Mlp, MlpConfig, Mode, OptimizerKind, ADAM_BETA1, ADAM_BETA2, ADAM_EPS};
use super::MlpModel;
use crate::dataset::WaveDataset;
use crate::error::{Error, Result};
use crate::rng::{child_seed, rng_from_seed, stream};
use crate::standardize::Standardization;

enum Optimizer {
    Sgd { lr: f64 },
    Adam {
        lr: f64,
        step: i32,
        first: Vec<Layer>,
        second: Vec<Layer>,
    },
}

impl Optimizer {
    fn new(config: &MlpConfig, net: &Mlp) -> Self {
        match config.optimizer {
            OptimizerKind::Sgd => Optimizer::Sgd {
                lr: config.learning_rate,
            },
            OptimizerKind::Adam => {
                let zeros = || {
                    net.layers()
                        .iter()
                        .map(|l| Layer::zeros(l.in_dim(), l.out_dim()))
                        .collect::<Vec<_>>()
                };
                Optimizer::Adam {
                    lr: config.learning_rate,
                    step: 0,
                    first: zeros(),
                    second: zeros(),
                }
            }
        }
    }

    fn apply(&mut self, net: &mut Mlp, grads: &Gradients) {
        match self {
            Optimizer::Sgd { lr } => {
                for (layer, g) in net.layers_mut().iter_mut().zip(&grads.layers) {
                    layer.weights.scaled_add(-*lr, &g.weights);
                    layer.bias.scaled_add(-*lr, &g.bias);
                }
            }
            Optimizer::Adam {
                lr,
                step,
                first,
                second,
            } => {
                *step += 1;
                let c1 = 1.0 - ADAM_BETA1.powi(*step);
                let c2 = 1.0 - ADAM_BETA2.powi(*step);
                let lr = *lr;
                let update = |p: &mut f64, g: &f64, m: &mut f64, v: &mut f64| {
                    *m = ADAM_BETA1 * *m + (1.0 - ADAM_BETA1) * g;
                    *v = ADAM_BETA2 * *v + (1.0 - ADAM_BETA2) * g * g;
                    *p -= lr * (*m / c1) / ((*v / c2).sqrt() + ADAM_EPS);
                };
                for (((layer, g), m), v) in net
                    .layers_mut()
                    .iter_mut()
                    .zip(&grads.layers)
                    .zip(first.iter_mut())
                    .zip(second.iter_mut())
                {
                    Zip::from(&mut layer.weights)
                        .and(&g.weights)
                        .and(&mut m.weights)
                        .and(&mut v.weights)
                        .for_each(update);
                    Zip::from(&mut layer.bias)
                        .and(&g.bias)
                        .and(&mut m.bias)
                        .and(&mut v.bias)
                        .for_each(update);
                }
            }
        }
    }
}

/// Trains on already-standardized feature rows.
///
/// Returns the network and the mean training loss of every epoch.
pub fn fit(features: ArrayView2<f64>, labels: ArrayView2<f64>, config: &MlpConfig) -> Result<(Mlp, Vec<f64>)> {
    fit_with(features, labels, config, &mut |_, _| {})
}

/// [`fit`] with a callback receiving `(epoch, mean loss)` after every epoch,
/// epochs counted from 1.
pub fn fit_with(
    features: ArrayView2<f64>,
    labels: ArrayView2<f64>,
    config: &MlpConfig,
    on_epoch: &mut dyn FnMut(usize, f64),
) -> Result<(Mlp, Vec<f64>)> {
    config.validate()?;
    let n = features.nrows();
    if n == 0 {
        return Err(Error::Split("no training samples".into()));
    }
    if labels.nrows() != n || labels.ncols() != config.output_dim {
        return Err(Error::shape(format!(
            "labels {:?} for {n} samples with {} outputs",
            labels.dim(),
            config.output_dim
        )));
    }
    if features.ncols() != config.input_dim {
        return Err(Error::shape(format!(
            "features have {} columns, config expects {}",
            features.ncols(),
            config.input_dim
        )));
    }
    let mut net = Mlp::he_uniform(
        &config.layer_dims(),
        config.dropout,
        child_seed(config.seed, &[stream::INIT]),
    )?;
    let mut opt = Optimizer::new(config, &net);
    let mut log = Vec::with_capacity(config.epochs);
    let mut order: Vec<usize> = (0..n).collect();
    for epoch in 0..config.epochs {
        let mut rng = rng_from_seed(child_seed(config.seed, &[stream::SHUFFLE, epoch as u64]));
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for (b, batch) in order.chunks(config.batch_size).enumerate() {
            let x = features.select(Axis(0), batch);
            let y = labels.select(Axis(0), batch);
            let mode = Mode::Train {
                dropout_seed: child_seed(config.seed, &[stream::DROPOUT, epoch as u64, b as u64]),
            };
            let cache = net.forward_batch(x.view(), mode)?;
            let (loss, grads) = net.backward(&cache, y.view())?;
            total += loss * batch.len() as f64;
            opt.apply(&mut net, &grads);
        }
        let mean = total / n as f64;
        if !mean.is_finite() {
            return Err(Error::Training {
                epoch: epoch + 1,
                loss: mean,
            });
        }
        log.push(mean);
        on_epoch(epoch + 1, mean);
    }
    Ok((net, log))
}

/// Trains on the train split of a standardized dataset.
pub fn train(ds: &WaveDataset, config: &MlpConfig) -> Result<MlpModel> {
    train_with(ds, config, &mut |_, _| {})
}

/// [`train`] with a per-epoch loss callback.
pub fn train_with(
    ds: &WaveDataset,
    config: &MlpConfig,
    on_epoch: &mut dyn FnMut(usize, f64),
) -> Result<MlpModel> {
    let stats = ds
        .standardization
        .clone()
        .ok_or_else(|| Error::Input("dataset must be standardized before training".into()))?;
    if ds.split.train.is_empty() {
        return Err(Error::Split("train split is empty".into()));
    }
    let dim = ds.feature_dim();
    if config.input_dim != dim {
        return Err(Error::shape(format!(
            "config input_dim {} but dataset features have length {dim}",
            config.input_dim
        )));
    }
    let n = ds.split.train.len();
    let mut x = Array2::<f64>::zeros((n, dim));
    let mut y = Array2::<f64>::zeros((n, 2));
    for (row, sample) in ds.train_samples().enumerate() {
        x.row_mut(row)
            .assign(&Array1::from(sample.data.as_slice().to_vec()));
        y[[row, 0]] = sample.label.x;
        y[[row, 1]] = sample.label.y;
    }
    let (net, log) = fit_with(x.view(), y.view(), config, on_epoch)?;
    MlpModel::new(config.clone(), net, stats, log)
}

/// Convenience for callers holding raw features.
pub fn fit_standardized(
    raw: ArrayView2<f64>,
    labels: ArrayView2<f64>,
    config: &MlpConfig,
) -> Result<MlpModel> {
    let stats = Standardization::fit(raw.rows().into_iter().map(|r| r.to_slice().expect("contiguous rows")))?;
    let mut x = raw.to_owned();
    for mut row in x.rows_mut() {
        stats.apply(row.as_slice_mut().expect("contiguous rows"))?;
    }
    let (net, log) = fit(x.view(), labels, config)?;
    MlpModel::new(config.clone(), net, stats, log)
}
