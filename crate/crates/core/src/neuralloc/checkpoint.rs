//! `GWNN0001` checkpoint files.
//!
//! Layout: 8-byte magic, little-endian `u64` header length, UTF-8 JSON
//! header, then every layer's parameters as little-endian `f32` in layer
//! order: the `out x in` weight matrix row-major, followed by the bias.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::mlp::{Layer, Mlp, MlpConfig, ADAM_BETA1, ADAM_BETA2, ADAM_EPS};
use super::MlpModel;
use crate::error::{Error, Result};
use crate::io_util::{read_f32_block, read_header, write_f32_block, write_header};
use crate::standardize::Standardization;

pub const MODEL_MAGIC: &[u8; 8] = b"GWNN0001";

#[derive(Debug, Serialize, Deserialize)]
struct OptimizerInfo {
    beta1: f64,
    beta2: f64,
    eps: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    layer_dims: Vec<usize>,
    dropout: f64,
    config: MlpConfig,
    adam: OptimizerInfo,
    seed: u64,
    standardization: Standardization,
    training_log: Vec<f64>,
    param_count: usize,
}

pub fn write_model(model: &MlpModel, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_model_to(model, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn write_model_to<W: Write>(model: &MlpModel, w: &mut W) -> Result<()> {
    let header = Header {
        layer_dims: model.net.dims(),
        dropout: model.net.dropout(),
        config: model.config.clone(),
        adam: OptimizerInfo {
            beta1: ADAM_BETA1,
            beta2: ADAM_BETA2,
            eps: ADAM_EPS,
        },
        seed: model.config.seed,
        standardization: model.standardization.clone(),
        training_log: model.training_log.clone(),
        param_count: model.net.num_params(),
    };
    write_header(w, MODEL_MAGIC, &header)?;
    for layer in model.net.layers() {
        let w_flat: Vec<f64> = layer.weights.iter().copied().collect();
        write_f32_block(w, &w_flat)?;
        write_f32_block(w, layer.bias.as_slice().expect("contiguous bias"))?;
    }
    Ok(())
}

pub fn read_model(path: impl AsRef<Path>) -> Result<MlpModel> {
    let mut r = BufReader::new(File::open(path)?);
    read_model_from(&mut r)
}

pub fn read_model_from<R: Read>(r: &mut R) -> Result<MlpModel> {
    let header: Header = read_header(r, MODEL_MAGIC)?;
    if header.layer_dims != header.config.layer_dims() {
        return Err(Error::format("layer dims disagree with stored config"));
    }
    if header.layer_dims.len() < 2 {
        return Err(Error::format("checkpoint needs at least two layer dims"));
    }
    header.standardization.validate()?;
    let mut layers = Vec::with_capacity(header.layer_dims.len() - 1);
    for dims in header.layer_dims.windows(2) {
        let (input, output) = (dims[0], dims[1]);
        let weights = Array2::from_shape_vec((output, input), read_f32_block(r, input * output)?)
            .map_err(|e| Error::format(e.to_string()))?;
        let bias = Array1::from(read_f32_block(r, output)?);
        layers.push(Layer { weights, bias });
    }
    let mut trailing = [0u8; 1];
    if r.read(&mut trailing)? != 0 {
        return Err(Error::format("trailing bytes after parameters"));
    }
    let net = Mlp::from_layers(layers, header.dropout).map_err(|e| Error::format(e.to_string()))?;
    if net.num_params() != header.param_count {
        return Err(Error::format("parameter count mismatch"));
    }
    MlpModel::new(header.config, net, header.standardization, header.training_log)
        .map_err(|e| Error::format(e.to_string()))
}
