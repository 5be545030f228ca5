//! Optional TOML run configuration.
//!
//! Every key is optional; command-line flags override file values, which
//! override built-in defaults.
//!
//! ```toml
//! seed = 7
//! threads = 1
//!
//! [gen]
//! t = 500
//! q = 250
//! f_max = 1e6
//! sensors = 8
//! plate = [1.0, 1.0]
//! modes = [{kind="linear", c=5400.0}, {kind="sqrt", d=0.25}]
//! alpha = "truncnorm"          # or "ideal", or a fixed number
//! snr = 25.0
//! ideal = false
//! per_sample_sensors = false
//! train_fraction = 0.8
//! excitation = {kind="gaussian", center_hz=250e3, width_hz=100e3}
//!
//! [train]
//! epochs = 50
//! hidden = [300, 200, 50]
//! dropout = 0.0
//! batch_size = 32
//! learning_rate = 1e-3
//! optimizer = "adam"
//!
//! [heatmap]
//! resolution = "100x100"
//!
//! [eval]
//! snrs = [5, 10, 15, 20, 25]
//! resolution = "50x50"
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dispersion::ModeCurve;
use crate::error::{Error, Result};
use crate::neuralloc::OptimizerKind;
use crate::wavefield::Excitation;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AlphaSetting {
    Named(AlphaName),
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum AlphaName {
    Truncnorm,
    Ideal,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenSection {
    pub t: Option<usize>,
    pub q: Option<usize>,
    pub f_max: Option<f64>,
    pub sensors: Option<usize>,
    pub plate: Option<[f64; 2]>,
    pub modes: Option<Vec<ModeCurve>>,
    pub alpha: Option<AlphaSetting>,
    pub snr: Option<f64>,
    pub ideal: Option<bool>,
    pub per_sample_sensors: Option<bool>,
    pub train_fraction: Option<f64>,
    pub excitation: Option<Excitation>,
    pub paper_scale: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSection {
    pub epochs: Option<usize>,
    pub hidden: Option<Vec<usize>>,
    pub dropout: Option<f64>,
    pub batch_size: Option<usize>,
    pub learning_rate: Option<f64>,
    pub optimizer: Option<OptimizerKind>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeatmapSection {
    pub resolution: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalSection {
    pub snrs: Option<Vec<f64>>,
    pub resolution: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    #[serde(default)]
    pub gen: GenSection,
    #[serde(default)]
    pub train: TrainSection,
    #[serde(default)]
    pub heatmap: HeatmapSection,
    #[serde(default)]
    pub eval: EvalSection,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Input(format!("invalid config: {e}")))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Input(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }
}
