//! Neural damage localizer: a fully connected regression network mapping a
//! standardized, flattened `Q x M` record to a damage position.

mod checkpoint;
mod mlp;
mod train;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::standardize::Standardization;
use crate::wavefield::{Point2, TimeMatrix};

pub use checkpoint::{read_model, read_model_from, write_model, write_model_to, MODEL_MAGIC};
pub use mlp::{
    euclidean_loss, euclidean_loss_grad, ForwardCache, Gradients, Layer, Mlp, MlpConfig, Mode,
    OptimizerKind, ADAM_BETA1, ADAM_BETA2, ADAM_EPS, DEFAULT_DROPOUT, DEFAULT_EPOCHS,
    DEFAULT_HIDDEN,
};
pub use train::{fit, fit_standardized, fit_with, train, train_with};

/// Whether a feature vector still needs the model's standardization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputScale {
    Raw,
    Standardized,
}

/// A trained network together with the statistics its inputs were scaled by.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    pub config: MlpConfig,
    pub net: Mlp,
    pub standardization: Standardization,
    pub training_log: Vec<f64>,
}

impl MlpModel {
    pub fn new(
        config: MlpConfig,
        net: Mlp,
        standardization: Standardization,
        training_log: Vec<f64>,
    ) -> Result<Self> {
        if net.dims() != config.layer_dims() {
            return Err(Error::shape(format!(
                "network dims {:?} differ from config {:?}",
                net.dims(),
                config.layer_dims()
            )));
        }
        if standardization.dim() != config.input_dim {
            return Err(Error::shape(format!(
                "standardization has {} features, network expects {}",
                standardization.dim(),
                config.input_dim
            )));
        }
        Ok(Self {
            config,
            net,
            standardization,
            training_log,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.net.input_dim()
    }

    /// Predicts from a flattened feature vector.
    pub fn predict_features(&self, features: &[f64], scale: InputScale) -> Result<Point2> {
        if features.len() != self.input_dim() {
            return Err(Error::shape(format!(
                "sample has {} features, model expects {}",
                features.len(),
                self.input_dim()
            )));
        }
        let out = match scale {
            InputScale::Standardized => self.net.forward(features, Mode::Infer)?.0,
            InputScale::Raw => {
                let mut v = features.to_vec();
                self.standardization.apply(&mut v)?;
                self.net.forward(&v, Mode::Infer)?.0
            }
        };
        if out.len() != 2 {
            return Err(Error::shape(format!(
                "model has {} outputs, a location needs 2",
                out.len()
            )));
        }
        Ok(Point2::new(out[0], out[1]))
    }

    /// Predicts from an unstandardized record. The output is not clipped to the plate.
    pub fn predict(&self, raw_sample: &TimeMatrix) -> Result<Point2> {
        self.predict_features(raw_sample.as_slice(), InputScale::Raw)
    }

    /// Batched [`MlpModel::predict`].
    pub fn predict_many(&self, raw: &[&TimeMatrix]) -> Result<Vec<Point2>> {
        if raw.is_empty() {
            return Ok(Vec::new());
        }
        let dim = self.input_dim();
        let mut x = Array2::<f64>::zeros((raw.len(), dim));
        for (mut row, s) in x.rows_mut().into_iter().zip(raw) {
            if s.as_slice().len() != dim {
                return Err(Error::shape(format!(
                    "sample has {} features, model expects {dim}",
                    s.as_slice().len()
                )));
            }
            let dst = row.as_slice_mut().expect("contiguous");
            dst.copy_from_slice(s.as_slice());
            self.standardization.apply(dst)?;
        }
        let cache = self.net.forward_batch(x.view(), Mode::Infer)?;
        Ok(cache
            .output()
            .rows()
            .into_iter()
            .map(|r| Point2::new(r[0], r[1]))
            .collect())
    }
}

/// Trains a model on `ds` (standardized) and returns it.
pub fn predict(model: &MlpModel, raw_sample: &TimeMatrix) -> Result<Point2> {
    model.predict(raw_sample)
}
