//! Simulated guided-wave datasets.
//!
//! Each sample draws a damage location (and optionally a fresh sensor
//! layout), an uncertainty scale, synthesizes the scattered field, converts it
//! to a `Q x M` time record and adds white Gaussian noise at a target SNR.
//! All randomness for sample `i` comes from a child seed of
//! `(master_seed, i)`, so generation is independent of thread count.

mod format;


use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dispersion::{default_modes, sample_alpha_with, DispersionModel, ModeCurve};
use crate::error::{Error, Result};
use crate::rng::{child_seed, rng_from_seed, stream};
use crate::standardize::Standardization;
use crate::wavefield::{
    Excitation, FrequencyGrid, InverseTransform, PathSynthesizer, Plate, PlateScene, Point2,
    SensorLayout, TimeMatrix,
};

pub use format::{
    read_dataset, read_dataset_from, write_dataset, write_dataset_to, DATASET_MAGIC,
    FLATTEN_ORDER,
};

const DAMAGE_MAX_TRIES: usize = 1000;

/// How the per-sample uncertainty scale is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlphaMode {
    /// Every sample uses the same scale.
    Fixed(f64),
    /// Truncated Gaussian draw per sample.
    TruncNorm,
}

/// Parameters of one dataset generation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    pub samples: usize,
    pub bins: usize,
    pub f_max: f64,
    pub sensors: usize,
    pub plate: Plate,
    pub modes: Vec<ModeCurve>,
    pub alpha: AlphaMode,
    /// Target SNR in dB; `None` leaves samples noiseless.
    pub snr_db: Option<f64>,
    pub excitation: Excitation,
    pub per_sample_sensors: bool,
    pub train_fraction: f64,
    pub seed: u64,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            samples: 500,
            bins: 250,
            f_max: 1e6,
            sensors: 8,
            plate: Plate::default(),
            modes: default_modes(),
            alpha: AlphaMode::TruncNorm,
            snr_db: Some(25.0),
            excitation: Excitation::Flat,
            per_sample_sensors: false,
            train_fraction: 0.8,
            seed: 0,
        }
    }
}

impl GenConfig {
    /// Uncertainty-free, noiseless variant of `self`.
    pub fn ideal(mut self) -> Self {
        self.alpha = AlphaMode::Fixed(1.0);
        self.snr_db = None;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples < 1 {
            return Err(Error::Input("need at least one sample".into()));
        }
        if self.sensors < 2 {
            return Err(Error::Input(format!(
                "need at least two sensors, got {}",
                self.sensors
            )));
        }
        FrequencyGrid::new(self.bins, self.f_max)?;
        Plate::new(self.plate.length, self.plate.width)?;
        self.excitation.validate()?;
        let alpha = match self.alpha {
            AlphaMode::Fixed(a) => a,
            AlphaMode::TruncNorm => 1.0,
        };
        DispersionModel::new(self.modes.clone(), alpha)?;
        if let Some(snr) = self.snr_db {
            if !snr.is_finite() {
                return Err(Error::Input(format!("snr must be finite, got {snr}")));
            }
        }
        if !(self.train_fraction > 0.0 && self.train_fraction <= 1.0) {
            return Err(Error::Input(format!(
                "train fraction must lie in (0, 1], got {}",
                self.train_fraction
            )));
        }
        Ok(())
    }
}

/// One simulated record.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveSample {
    /// Network input: noisy, possibly standardized.
    pub data: TimeMatrix,
    /// Noiseless record, kept for re-noising at other SNRs.
    pub clean: Option<TimeMatrix>,
    pub label: Point2,
    pub alpha: f64,
    /// `f64::INFINITY` for noiseless samples.
    pub snr_db: f64,
    pub seed: u64,
    /// Present only when sensors are redrawn per sample.
    pub sensors: Option<Vec<Point2>>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

impl Split {
    /// Shuffles `0..n` and assigns the first `round(n * fraction)` to train.
    pub fn shuffled(n: usize, train_fraction: f64, seed: u64) -> Self {
        let mut rng = rng_from_seed(seed);
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(&mut rng);
        let n_train = ((n as f64) * train_fraction).round() as usize;
        let n_train = n_train.clamp(1.min(n), n);
        let mut train = idx[..n_train].to_vec();
        let mut test = idx[n_train..].to_vec();
        train.sort_unstable();
        test.sort_unstable();
        Self { train, test }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        let mut seen = vec![false; n];
        for &i in self.train.iter().chain(&self.test) {
            if i >= n || seen[i] {
                return Err(Error::Split(format!(
                    "index {i} repeated or out of range in split of {n} samples"
                )));
            }
            seen[i] = true;
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::Split("split does not cover every sample".into()));
        }
        Ok(())
    }
}

/// A collection of samples sharing one frequency grid and pair list.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveDataset {
    pub samples: Vec<WaveSample>,
    pub grid: FrequencyGrid,
    /// Shared layout; with per-sample sensors only its plate and pairs apply.
    pub layout: SensorLayout,
    pub modes: Vec<ModeCurve>,
    pub excitation: Excitation,
    pub split: Split,
    pub standardization: Option<Standardization>,
    pub config: GenConfig,
}

impl WaveDataset {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn feature_dim(&self) -> usize {
        self.grid.len() * self.layout.num_pairs()
    }

    pub fn has_clean(&self) -> bool {
        !self.samples.is_empty() && self.samples.iter().all(|s| s.clean.is_some())
    }

    /// Sensor layout that produced sample `index`.
    pub fn layout_of(&self, index: usize) -> Result<SensorLayout> {
        let sample = self.samples.get(index).ok_or(Error::Index {
            index,
            len: self.samples.len(),
        })?;
        match &sample.sensors {
            None => Ok(self.layout.clone()),
            Some(sensors) => SensorLayout::new(
                self.layout.plate,
                sensors.clone(),
                self.layout.pairs.clone(),
            ),
        }
    }

    /// Dispersion model with the given scale and this dataset's curves.
    pub fn dispersion(&self, alpha: f64) -> Result<DispersionModel> {
        DispersionModel::new(self.modes.clone(), alpha)
    }

    pub fn train_samples(&self) -> impl Iterator<Item = &WaveSample> {
        self.split.train.iter().map(move |&i| &self.samples[i])
    }

    pub fn test_samples(&self) -> impl Iterator<Item = &WaveSample> {
        self.split.test.iter().map(move |&i| &self.samples[i])
    }
}

fn uniform_point<R: Rng + ?Sized>(plate: &Plate, rng: &mut R) -> Point2 {
    Point2::new(
        rng.random::<f64>() * plate.length,
        rng.random::<f64>() * plate.width,
    )
}

/// `m` sensors uniform on the plate, with all ordered pairs.
pub fn random_layout<R: Rng + ?Sized>(plate: &Plate, m: usize, rng: &mut R) -> Result<SensorLayout> {
    if m < 2 {
        return Err(Error::Input(format!("need at least two sensors, got {m}")));
    }
    let sensors = (0..m).map(|_| uniform_point(plate, rng)).collect();
    SensorLayout::with_all_pairs(*plate, sensors)
}

/// Uniform damage location, redrawn until it clears every sensor.
pub fn random_damage<R: Rng + ?Sized>(layout: &SensorLayout, rng: &mut R) -> Result<Point2> {
    for _ in 0..DAMAGE_MAX_TRIES {
        let p = uniform_point(&layout.plate, rng);
        if layout.admits_damage(&p) {
            return Ok(p);
        }
    }
    Err(Error::Geometry(format!(
        "no admissible damage location after {DAMAGE_MAX_TRIES} draws"
    )))
}

/// Random sensors and damage from one seed.
pub fn random_scene(plate: &Plate, m: usize, rng_seed: u64) -> Result<PlateScene> {
    let mut rng = rng_from_seed(rng_seed);
    let layout = random_layout(plate, m, &mut rng)?;
    let damage = random_damage(&layout, &mut rng)?;
    PlateScene::new(layout, damage)
}

/// Adds i.i.d. Gaussian noise whose power is the matrix power over `10^(snr/10)`.
///
/// `snr_db = +inf` returns the input unchanged.
pub fn add_awgn(data: &TimeMatrix, snr_db: f64, rng_seed: u64) -> Result<TimeMatrix> {
    let mut out = data.clone();
    add_awgn_in_place(&mut out, snr_db, rng_seed)?;
    Ok(out)
}

pub fn add_awgn_in_place(data: &mut TimeMatrix, snr_db: f64, rng_seed: u64) -> Result<()> {
    if snr_db == f64::INFINITY {
        return Ok(());
    }
    if !snr_db.is_finite() {
        return Err(Error::Domain(format!("snr must be finite or +inf, got {snr_db}")));
    }
    let power = data.power();
    if !(power > 0.0) {
        return Err(Error::DegenerateSignal(
            "cannot set an SNR on an all-zero signal".into(),
        ));
    }
    let sigma = (power / 10f64.powf(snr_db / 10.0)).sqrt();
    let mut rng = rng_from_seed(rng_seed);
    for v in data.as_mut_slice() {
        let z: f64 = StandardNormal.sample(&mut rng);
        *v += sigma * z;
    }
    Ok(())
}

/// Child seed of the noise realization for sample `seed`.
pub fn noise_seed(sample_seed: u64) -> u64 {
    child_seed(sample_seed, &[stream::NOISE])
}

struct SampleBuilder<'a> {
    config: &'a GenConfig,
    grid: FrequencyGrid,
    shared_layout: &'a SensorLayout,
}

impl SampleBuilder<'_> {
    fn build(&self, index: usize) -> Result<WaveSample> {
        let cfg = self.config;
        let seed = child_seed(cfg.seed, &[stream::SAMPLE, index as u64]);

        let own_layout;
        let layout = if cfg.per_sample_sensors {
            let mut rng = rng_from_seed(child_seed(seed, &[stream::SENSORS]));
            own_layout = random_layout(&cfg.plate, cfg.sensors, &mut rng)?;
            &own_layout
        } else {
            self.shared_layout
        };

        let mut rng = rng_from_seed(child_seed(seed, &[stream::DAMAGE]));
        let damage = random_damage(layout, &mut rng)?;

        let alpha = match cfg.alpha {
            AlphaMode::Fixed(a) => a,
            AlphaMode::TruncNorm => {
                sample_alpha_with(&mut rng_from_seed(child_seed(seed, &[stream::ALPHA])))?
            }
        };
        let model = DispersionModel::new(cfg.modes.clone(), alpha)?;
        let clean = simulate(layout, &damage, &self.grid, &model, &cfg.excitation)?;
        let (data, snr_db) = match cfg.snr_db {
            Some(snr) => (add_awgn(&clean, snr, noise_seed(seed))?, snr),
            None => (clean.clone(), f64::INFINITY),
        };
        Ok(WaveSample {
            data,
            clean: Some(clean),
            label: damage,
            alpha,
            snr_db,
            seed,
            sensors: cfg.per_sample_sensors.then(|| layout.sensors.clone()),
        })
    }
}

/// Noiseless time record for damage at `damage`.
pub fn simulate(
    layout: &SensorLayout,
    damage: &Point2,
    grid: &FrequencyGrid,
    model: &DispersionModel,
    excitation: &Excitation,
) -> Result<TimeMatrix> {
    let synth = PathSynthesizer::new(grid, model, excitation)?;
    let mut inv = InverseTransform::new(grid.len());
    let mut scratch = TimeScratch::new(grid.len());
    let mut out = TimeMatrix::zeros(grid.len(), layout.num_pairs(), grid.dt());
    simulate_into(layout, damage, &synth, &mut inv, &mut scratch, &mut out)?;
    Ok(out)
}

pub(crate) struct TimeScratch {
    spec: Vec<rustfft::num_complex::Complex64>,
    col: Vec<f64>,
}

impl TimeScratch {
    pub(crate) fn new(q: usize) -> Self {
        Self {
            spec: vec![rustfft::num_complex::Complex64::new(0.0, 0.0); q],
            col: vec![0.0; q],
        }
    }
}

pub(crate) fn simulate_into(
    layout: &SensorLayout,
    damage: &Point2,
    synth: &PathSynthesizer,
    inv: &mut InverseTransform,
    scratch: &mut TimeScratch,
    out: &mut TimeMatrix,
) -> Result<()> {
    let m = layout.num_pairs();
    for p in 0..m {
        synth.path_into(layout.path_length(p, damage)?, &mut scratch.spec)?;
        inv.column(&scratch.spec, &mut scratch.col)?;
        for (i, v) in scratch.col.iter().enumerate() {
            out.set(i, p, *v);
        }
    }
    Ok(())
}

/// Runs the full simulation described by `config`.
pub fn generate(config: &GenConfig) -> Result<WaveDataset> {
    config.validate()?;
    let grid = FrequencyGrid::new(config.bins, config.f_max)?;
    let mut layout_rng = rng_from_seed(child_seed(config.seed, &[stream::SENSORS]));
    let layout = random_layout(&config.plate, config.sensors, &mut layout_rng)?;

    let builder = SampleBuilder {
        config,
        grid,
        shared_layout: &layout,
    };
    let samples = (0..config.samples)
        .into_par_iter()
        .map(|i| builder.build(i).map_err(|e| e.at_sample(i)))
        .collect::<Result<Vec<_>>>()?;

    let split = Split::shuffled(
        config.samples,
        config.train_fraction,
        child_seed(config.seed, &[stream::SPLIT]),
    );
    Ok(WaveDataset {
        samples,
        grid,
        layout,
        modes: config.modes.clone(),
        excitation: config.excitation,
        split,
        standardization: None,
        config: config.clone(),
    })
}

/// Fits z-scoring on the train split and applies it to every sample's data.
pub fn standardize_fit_transform(mut ds: WaveDataset) -> Result<WaveDataset> {
    if ds.standardization.is_some() {
        return Err(Error::Input("dataset is already standardized".into()));
    }
    if ds.split.train.is_empty() {
        return Err(Error::Split("train split is empty".into()));
    }
    let stats = Standardization::fit(ds.train_samples().map(|s| s.data.as_slice()))?;
    for sample in &mut ds.samples {
        stats.apply(sample.data.as_mut_slice())?;
    }
    ds.standardization = Some(stats);
    Ok(ds)
}
