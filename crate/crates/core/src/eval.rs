//! Average localization error and SNR sweeps over competing localizers.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::dataset::{add_awgn, WaveDataset};
use crate::error::{Error, Result};
use crate::neuralloc::MlpModel;
use crate::physloc::{localize_grid_with, ModelCache, Resolution};
use crate::rng::{child_seed, stream};
use crate::wavefield::{Point2, TimeMatrix};

/// Mean and population standard deviation of the Euclidean errors between
/// true and predicted locations, given as `(truth, prediction)` pairs.
pub fn ale(pairs: &[(Point2, Point2)]) -> Result<(f64, f64)> {
    if pairs.is_empty() {
        return Err(Error::Input("ALE needs at least one pair".into()));
    }
    let n = pairs.len() as f64;
    let errors: Vec<f64> = pairs.iter().map(|(t, p)| t.distance(p)).collect();
    let mean = errors.iter().sum::<f64>() / n;
    let var = errors.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / n;
    Ok((mean, var.sqrt()))
}

/// A damage localizer that can be evaluated on dataset records.
pub trait Localizer: Sync {
    fn id(&self) -> &str;

    /// Locates damage in `inputs[k]`, which is a record of sample `indices[k]` of `ds`.
    fn localize_batch(&self, ds: &WaveDataset, indices: &[usize], inputs: &[TimeMatrix]) -> Result<Vec<Point2>>;
}

pub struct DnnLocalizer {
    id: String,
    model: MlpModel,
}

impl DnnLocalizer {
    pub fn new(id: impl Into<String>, model: MlpModel) -> Self {
        Self { id: id.into(), model }
    }
}

impl Localizer for DnnLocalizer {
    fn id(&self) -> &str {
        &self.id
    }

    fn localize_batch(&self, _ds: &WaveDataset, _indices: &[usize], inputs: &[TimeMatrix]) -> Result<Vec<Point2>> {
        let refs: Vec<&TimeMatrix> = inputs.iter().collect();
        self.model.predict_many(&refs)
    }
}

/// Grid-search localizer using the nominal (uncertainty-free) propagation model.
pub struct PhysicalLocalizer {
    id: String,
    resolution: Resolution,
    cache: Mutex<Option<ModelCache>>,
}

impl PhysicalLocalizer {
    pub fn new(id: impl Into<String>, resolution: Resolution) -> Self {
        Self {
            id: id.into(),
            resolution,
            cache: Mutex::new(None),
        }
    }
}

impl Localizer for PhysicalLocalizer {
    fn id(&self) -> &str {
        &self.id
    }

    fn localize_batch(&self, ds: &WaveDataset, indices: &[usize], inputs: &[TimeMatrix]) -> Result<Vec<Point2>> {
        let model = ds.dispersion(1.0)?;
        let mut out = Vec::with_capacity(inputs.len());
        for (&i, x) in indices.iter().zip(inputs) {
            let layout = ds.layout_of(i)?;
            if ds.samples[i].sensors.is_some() {
                let hm = localize_grid_with(x, &layout, &ds.grid, &model, &ds.excitation, self.resolution)?;
                out.push(hm.argmax());
                continue;
            }
            let mut guard = self.cache.lock().map_err(|_| Error::Internal("cache lock poisoned".into()))?;
            let stale = guard
                .as_ref()
                .is_none_or(|c| !c.serves(&layout, &ds.grid, &model, &ds.excitation, self.resolution));
            if stale {
                *guard = Some(ModelCache::build(&layout, &ds.grid, &model, &ds.excitation, self.resolution)?);
            }
            let cache = guard.as_ref().expect("cache just built");
            out.push(cache.localize(x)?.argmax());
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub method: String,
    pub snr_db: f64,
    pub ale_mean: f64,
    pub ale_std: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Provenance {
    pub dataset_sha256: Option<String>,
    pub model_sha256: BTreeMap<String, String>,
    pub master_seed: u64,
    pub config: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalizationReport {
    pub rows: Vec<ReportRow>,
    pub provenance: Provenance,
}

pub const REPORT_CSV_HEADER: &str = "method,snr_db,ale_mean,ale_std,n";

impl LocalizationReport {
    pub fn row(&self, method: &str, snr_db: f64) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.method == method && r.snr_db == snr_db)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(REPORT_CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.method, r.snr_db, r.ale_mean, r.ale_std, r.n
            ));
        }
        out
    }

    pub fn write(&self, csv_path: impl AsRef<Path>, json_path: impl AsRef<Path>) -> Result<()> {
        fs::write(csv_path, self.to_csv())?;
        let json = serde_json::to_string_pretty(self).map_err(|e| Error::Internal(e.to_string()))?;
        fs::write(json_path, json)?;
        Ok(())
    }
}

/// Noise seed for re-noising sample `sample_seed` at `snr_db` in a sweep.
pub fn sweep_noise_seed(master_seed: u64, sample_seed: u64, snr_db: f64) -> u64 {
    child_seed(master_seed, &[stream::SWEEP, sample_seed, snr_db.to_bits()])
}

/// Re-noises every clean test record at each SNR and scores every method on
/// the same noisy inputs.
pub fn sweep(
    test_ds: &WaveDataset,
    snrs: &[f64],
    methods: &[&dyn Localizer],
    master_seed: u64,
) -> Result<LocalizationReport> {
    if methods.is_empty() {
        return Err(Error::Input("sweep needs at least one method".into()));
    }
    if snrs.is_empty() {
        return Err(Error::Input("sweep needs at least one SNR".into()));
    }
    if !test_ds.has_clean() {
        return Err(Error::format("dataset has no clean payload to re-noise"));
    }
    let indices = test_ds.split.test.clone();
    if indices.is_empty() {
        return Err(Error::Split("test split is empty".into()));
    }
    let mut rows = Vec::with_capacity(snrs.len() * methods.len());
    for &snr in snrs {
        let inputs = noisy_inputs(test_ds, &indices, snr, master_seed)?;
        for method in methods {
            let preds = method.localize_batch(test_ds, &indices, &inputs)?;
            let pairs: Vec<(Point2, Point2)> = indices
                .iter()
                .zip(preds)
                .map(|(&i, p)| (test_ds.samples[i].label, p))
                .collect();
            let (mean, std) = ale(&pairs)?;
            rows.push(ReportRow {
                method: method.id().to_string(),
                snr_db: snr,
                ale_mean: mean,
                ale_std: std,
                n: pairs.len(),
            });
        }
    }
    rows.sort_by(|a, b| a.method.cmp(&b.method).then(a.snr_db.total_cmp(&b.snr_db)));
    Ok(LocalizationReport {
        rows,
        provenance: Provenance {
            master_seed,
            ..Provenance::default()
        },
    })
}

/// The shared noisy test inputs of one sweep step.
pub fn noisy_inputs(ds: &WaveDataset, indices: &[usize], snr_db: f64, master_seed: u64) -> Result<Vec<TimeMatrix>> {
    indices
        .iter()
        .map(|&i| {
            let s = ds.samples.get(i).ok_or(Error::Index { index: i, len: ds.len() })?;
            let clean = s
                .clean
                .as_ref()
                .ok_or_else(|| Error::format("dataset has no clean payload to re-noise"))?;
            add_awgn(clean, snr_db, sweep_noise_seed(master_seed, s.seed, snr_db)).map_err(|e| e.at_sample(i))
        })
        .collect()
}
