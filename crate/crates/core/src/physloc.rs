//! Model-based localization by grid search.
//!
//! Every candidate cell center is scored by how well the nominal propagation
//! model (uncertainty scale fixed at 1, no noise) explains the observed record:
//! the sum over pairs of the normalized absolute inner product between the
//! observed column and the modelled column. The best cell is the estimate.

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{simulate_into, TimeScratch};
use crate::dispersion::DispersionModel;
use crate::error::{Error, Result};
use crate::wavefield::{
    Excitation, FrequencyGrid, InverseTransform, PathSynthesizer, Plate, Point2, SensorLayout,
    TimeMatrix,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Resolution {
    pub nx: usize,
    pub ny: usize,
}

impl Resolution {
    pub fn new(nx: usize, ny: usize) -> Result<Self> {
        if nx < 2 || ny < 2 {
            return Err(Error::Input(format!(
                "grid resolution must be at least 2x2, got {nx}x{ny}"
            )));
        }
        Ok(Self { nx, ny })
    }

    pub fn cells(&self) -> usize {
        self.nx * self.ny
    }

    pub fn cell_center(&self, plate: &Plate, cell: usize) -> Point2 {
        let (ix, iy) = (cell % self.nx, cell / self.nx);
        Point2::new(
            (ix as f64 + 0.5) * plate.length / self.nx as f64,
            (iy as f64 + 0.5) * plate.width / self.ny as f64,
        )
    }

    /// Length of one cell diagonal.
    pub fn cell_diagonal(&self, plate: &Plate) -> f64 {
        (plate.length / self.nx as f64).hypot(plate.width / self.ny as f64)
    }
}

impl std::str::FromStr for Resolution {
    type Err = Error;

    /// Parses `"NXxNY"` or a single `"N"`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Input(format!("resolution must look like 50x50, got {s:?}"));
        let (a, b) = match s.split_once(['x', 'X']) {
            Some((a, b)) => (a, b),
            None => (s, s),
        };
        let nx = a.trim().parse().map_err(|_| bad())?;
        let ny = b.trim().parse().map_err(|_| bad())?;
        Self::new(nx, ny)
    }
}

/// Scores over a regular grid of candidate damage positions.
#[derive(Debug, Clone, PartialEq)]
pub struct Heatmap {
    pub resolution: Resolution,
    pub plate: Plate,
    /// Row-major, one row per y-line; `-inf` marks cells too close to a sensor.
    pub scores: Vec<f64>,
    pub argmax_cell: usize,
}

impl Heatmap {
    fn from_scores(resolution: Resolution, plate: Plate, scores: Vec<f64>) -> Result<Self> {
        let mut best = 0;
        for (i, &s) in scores.iter().enumerate() {
            if s > scores[best] {
                best = i;
            }
        }
        if scores[best] == f64::NEG_INFINITY {
            return Err(Error::Geometry("every grid cell is too close to a sensor".into()));
        }
        Ok(Self {
            resolution,
            plate,
            scores,
            argmax_cell: best,
        })
    }

    pub fn argmax(&self) -> Point2 {
        self.resolution.cell_center(&self.plate, self.argmax_cell)
    }

    pub fn max_score(&self) -> f64 {
        self.scores[self.argmax_cell]
    }

    pub fn score(&self, ix: usize, iy: usize) -> f64 {
        self.scores[iy * self.resolution.nx + ix]
    }

    /// Scores as CSV, one line per y index.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for row in self.scores.chunks(self.resolution.nx) {
            let line: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }

    /// Writes `csv_path` and a JSON sidecar describing cell geometry.
    pub fn write(
        &self,
        csv_path: impl AsRef<Path>,
        json_path: impl AsRef<Path>,
        truth: Option<Point2>,
        extra: serde_json::Value,
    ) -> Result<()> {
        fs::write(csv_path, self.to_csv())?;
        let sidecar = HeatmapSidecar {
            nx: self.resolution.nx,
            ny: self.resolution.ny,
            plate: self.plate,
            cell_width: self.plate.length / self.resolution.nx as f64,
            cell_height: self.plate.width / self.resolution.ny as f64,
            layout: "row-major, one CSV row per y index; cell (ix, iy) centered at ((ix+0.5)*cell_width, (iy+0.5)*cell_height)".into(),
            argmax: self.argmax(),
            argmax_cell: [self.argmax_cell % self.resolution.nx, self.argmax_cell / self.resolution.nx],
            max_score: self.max_score(),
            true_damage: truth,
            error_m: truth.map(|t| t.distance(&self.argmax())),
            extra,
        };
        let json = serde_json::to_string_pretty(&sidecar).map_err(|e| Error::Internal(e.to_string()))?;
        fs::write(json_path, json)?;
        Ok(())
    }
}

#[derive(Serialize)]
struct HeatmapSidecar {
    nx: usize,
    ny: usize,
    plate: Plate,
    cell_width: f64,
    cell_height: f64,
    layout: String,
    argmax: Point2,
    argmax_cell: [usize; 2],
    max_score: f64,
    true_damage: Option<Point2>,
    error_m: Option<f64>,
    extra: serde_json::Value,
}

/// Observed record rearranged pair-major with unit-norm columns.
pub struct NormalizedColumns {
    q: usize,
    data: Vec<f64>,
}

impl NormalizedColumns {
    pub fn new(x: &TimeMatrix) -> Self {
        let (q, m) = (x.rows(), x.cols());
        let mut data = vec![0.0; q * m];
        for p in 0..m {
            let col = &mut data[p * q..(p + 1) * q];
            for (i, v) in col.iter_mut().enumerate() {
                *v = x.get(i, p);
            }
            let norm = dot(col, col).sqrt();
            if norm > 0.0 && norm.is_finite() {
                col.iter_mut().for_each(|v| *v /= norm);
            } else {
                col.fill(0.0);
            }
        }
        Self { q, data }
    }

    fn pairs(&self) -> usize {
        self.data.len() / self.q
    }

    /// Sum over pairs of `|<a_p, b_p>|`; both operands already normalized.
    fn correlate(&self, other: &NormalizedColumns) -> f64 {
        self.data
            .chunks_exact(self.q)
            .zip(other.data.chunks_exact(other.q))
            .map(|(a, b)| dot(a, b).abs())
            .sum()
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for i in 0..chunks {
        for k in 0..4 {
            acc[k] += a[4 * i + k] * b[4 * i + k];
        }
    }
    let mut tail = 0.0;
    for i in 4 * chunks..a.len() {
        tail += a[i] * b[i];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// Noise-free synthesis with the nominal model, reused across cells.
struct NominalModel {
    synth: PathSynthesizer,
    grid: FrequencyGrid,
}

impl NominalModel {
    fn new(grid: &FrequencyGrid, model: &DispersionModel, excitation: &Excitation) -> Result<Self> {
        Ok(Self {
            synth: PathSynthesizer::new(grid, &model.with_alpha(1.0)?, excitation)?,
            grid: *grid,
        })
    }

    fn columns(&self, layout: &SensorLayout, candidate: &Point2) -> Result<NormalizedColumns> {
        let q = self.grid.len();
        let mut inv = InverseTransform::new(q);
        let mut scratch = TimeScratch::new(q);
        let mut out = TimeMatrix::zeros(q, layout.num_pairs(), self.grid.dt());
        simulate_into(layout, candidate, &self.synth, &mut inv, &mut scratch, &mut out)?;
        Ok(NormalizedColumns::new(&out))
    }
}

fn check_observed(observed: &TimeMatrix, layout: &SensorLayout, grid: &FrequencyGrid) -> Result<()> {
    if observed.rows() != grid.len() || observed.cols() != layout.num_pairs() {
        return Err(Error::shape(format!(
            "observed record is {}x{}, expected {}x{}",
            observed.rows(),
            observed.cols(),
            grid.len(),
            layout.num_pairs()
        )));
    }
    Ok(())
}

/// Correlation between `observed` and the nominal model for damage at `candidate`.
///
/// Returns `-inf` when the candidate is closer than the guard distance to a sensor.
pub fn correlation_score(
    observed: &TimeMatrix,
    candidate: &Point2,
    layout: &SensorLayout,
    grid: &FrequencyGrid,
    model: &DispersionModel,
) -> Result<f64> {
    correlation_score_with(observed, candidate, layout, grid, model, &Excitation::Flat)
}

pub fn correlation_score_with(
    observed: &TimeMatrix,
    candidate: &Point2,
    layout: &SensorLayout,
    grid: &FrequencyGrid,
    model: &DispersionModel,
    excitation: &Excitation,
) -> Result<f64> {
    check_observed(observed, layout, grid)?;
    if !layout.plate.contains(candidate) {
        return Err(Error::Geometry(format!(
            "candidate ({}, {}) outside the plate",
            candidate.x, candidate.y
        )));
    }
    if !layout.admits_damage(candidate) {
        return Ok(f64::NEG_INFINITY);
    }
    let nominal = NominalModel::new(grid, model, excitation)?;
    let obs = NormalizedColumns::new(observed);
    Ok(obs.correlate(&nominal.columns(layout, candidate)?))
}

/// Scores every cell without keeping model records in memory.
pub fn localize_grid(
    observed: &TimeMatrix,
    layout: &SensorLayout,
    grid: &FrequencyGrid,
    model: &DispersionModel,
    resolution: Resolution,
) -> Result<Heatmap> {
    localize_grid_with(observed, layout, grid, model, &Excitation::Flat, resolution)
}

pub fn localize_grid_with(
    observed: &TimeMatrix,
    layout: &SensorLayout,
    grid: &FrequencyGrid,
    model: &DispersionModel,
    excitation: &Excitation,
    resolution: Resolution,
) -> Result<Heatmap> {
    check_observed(observed, layout, grid)?;
    let nominal = NominalModel::new(grid, model, excitation)?;
    let obs = NormalizedColumns::new(observed);
    let scores = (0..resolution.cells())
        .into_par_iter()
        .map(|cell| {
            let c = resolution.cell_center(&layout.plate, cell);
            if !layout.admits_damage(&c) {
                return Ok(f64::NEG_INFINITY);
            }
            Ok(obs.correlate(&nominal.columns(layout, &c)?))
        })
        .collect::<Result<Vec<_>>>()?;
    Heatmap::from_scores(resolution, layout.plate, scores)
}

/// Precomputed nominal records for every cell of one sensor layout.
pub struct ModelCache {
    layout: SensorLayout,
    grid: FrequencyGrid,
    model: DispersionModel,
    excitation: Excitation,
    resolution: Resolution,
    cells: Vec<Option<NormalizedColumns>>,
}

impl ModelCache {
    pub fn build(
        layout: &SensorLayout,
        grid: &FrequencyGrid,
        model: &DispersionModel,
        excitation: &Excitation,
        resolution: Resolution,
    ) -> Result<Self> {
        let nominal = NominalModel::new(grid, model, excitation)?;
        let cells = (0..resolution.cells())
            .into_par_iter()
            .map(|cell| {
                let c = resolution.cell_center(&layout.plate, cell);
                if layout.admits_damage(&c) {
                    nominal.columns(layout, &c).map(Some)
                } else {
                    Ok(None)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            layout: layout.clone(),
            grid: *grid,
            model: model.clone(),
            excitation: *excitation,
            resolution,
            cells,
        })
    }

    /// Whether this cache was built from exactly these inputs.
    pub fn serves(
        &self,
        layout: &SensorLayout,
        grid: &FrequencyGrid,
        model: &DispersionModel,
        excitation: &Excitation,
        resolution: Resolution,
    ) -> bool {
        &self.layout == layout
            && &self.grid == grid
            && &self.model == model
            && &self.excitation == excitation
            && self.resolution == resolution
    }

    pub fn layout(&self) -> &SensorLayout {
        &self.layout
    }

    pub fn resolution(&self) -> Resolution {
        self.resolution
    }

    pub fn localize(&self, observed: &TimeMatrix) -> Result<Heatmap> {
        check_observed(observed, &self.layout, &self.grid)?;
        let obs = NormalizedColumns::new(observed);
        debug_assert_eq!(obs.pairs(), self.layout.num_pairs());
        let scores = self
            .cells
            .par_iter()
            .map(|cell| match cell {
                Some(cols) => obs.correlate(cols),
                None => f64::NEG_INFINITY,
            })
            .collect();
        Heatmap::from_scores(self.resolution, self.layout.plate, scores)
    }
}
