#![allow(dead_code)]

use gwloc::dataset::GenConfig;
use gwloc::eval::ale;
use gwloc::neuralloc::{Layer, Mlp, Mode};
use gwloc::rng::rng_from_seed;
use gwloc::wavefield::Point2;
use ndarray::Array2;
use rand::Rng;

pub const FD_STEP: f64 = 1e-5;

fn batch_loss(net: &Mlp, x: &Array2<f64>, y: &Array2<f64>, mode: Mode) -> f64 {
    let cache = net.forward_batch(x.view(), mode).unwrap();
    net.backward(&cache, y.view()).unwrap().0
}

/// Weights (row-major) followed by biases.
fn flat_param(layer: &Layer, i: usize) -> f64 {
    let n = layer.weights.len();
    if i < n {
        layer.weights.as_slice().unwrap()[i]
    } else {
        layer.bias[i - n]
    }
}

fn flat_param_mut(layer: &mut Layer, i: usize) -> &mut f64 {
    let n = layer.weights.len();
    if i < n {
        &mut layer.weights.as_slice_mut().unwrap()[i]
    } else {
        &mut layer.bias[i - n]
    }
}

/// Largest `|analytic - central difference| / max(1, |analytic|)` over every
/// parameter of a random net with the given widths.
pub fn max_gradient_error(dims: &[usize], dropout: f64, batch: usize, seed: u64) -> f64 {
    let mut rng = rng_from_seed(seed);
    let mut net = Mlp::he_uniform(dims, dropout, seed).unwrap();
    // Nonzero biases keep pre-activations off the ReLU kink at exactly zero.
    for layer in net.layers_mut() {
        layer.bias.mapv_inplace(|_| rng.random_range(-0.5..0.5));
    }
    let x = Array2::from_shape_fn((batch, dims[0]), |_| rng.random_range(-1.0..1.0));
    let y = Array2::from_shape_fn((batch, *dims.last().unwrap()), |_| rng.random_range(-1.0..1.0));
    let mode = Mode::Train {
        dropout_seed: seed ^ 0x5eed,
    };
    let cache = net.forward_batch(x.view(), mode).unwrap();
    let (_, grads) = net.backward(&cache, y.view()).unwrap();
    let mut worst = 0.0f64;
    for l in 0..net.layers().len() {
        let n_weights = net.layers()[l].weights.len();
        let n_params = n_weights + net.layers()[l].bias.len();
        for i in 0..n_params {
            let analytic = flat_param(&grads.layers[l], i);
            *flat_param_mut(&mut net.layers_mut()[l], i) += FD_STEP;
            let plus = batch_loss(&net, &x, &y, mode);
            *flat_param_mut(&mut net.layers_mut()[l], i) -= 2.0 * FD_STEP;
            let minus = batch_loss(&net, &x, &y, mode);
            *flat_param_mut(&mut net.layers_mut()[l], i) += FD_STEP;
            let fd = (plus - minus) / (2.0 * FD_STEP);
            worst = worst.max((analytic - fd).abs() / analytic.abs().max(1.0));
        }
    }
    worst
}

/// Independent re-summation of the mean and population spread of distances.
pub fn ale_oracle(pairs: &[(Point2, Point2)]) -> (f64, f64) {
    let d: Vec<f64> = pairs
        .iter()
        .map(|(a, b)| ((a.x - b.x).powi(2) + (a.y - b.y).powi(2)).sqrt())
        .collect();
    let mean = d.iter().sum::<f64>() / d.len() as f64;
    let var = d.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / d.len() as f64;
    (mean, var.sqrt())
}

pub fn random_pairs(n: usize, seed: u64) -> Vec<(Point2, Point2)> {
    let mut rng = rng_from_seed(seed);
    (0..n)
        .map(|_| {
            (
                Point2::new(rng.random(), rng.random()),
                Point2::new(rng.random(), rng.random()),
            )
        })
        .collect()
}

pub fn ale_gap(pairs: &[(Point2, Point2)]) -> f64 {
    let (m, s) = ale(pairs).unwrap();
    let (om, os) = ale_oracle(pairs);
    (m - om).abs().max((s - os).abs())
}

/// A quick dataset for pipeline tests.
pub fn small_config(seed: u64) -> GenConfig {
    GenConfig {
        samples: 60,
        bins: 32,
        sensors: 4,
        seed,
        ..GenConfig::default()
    }
}
