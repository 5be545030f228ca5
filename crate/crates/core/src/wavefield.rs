//! Far-field scattered-wave synthesis and time-domain conversion.
//!
//! For a transmitter, a point scatterer and a receiver, the wave travels the
//! path length `r = |tx - damage| + |damage - rx|`. Each mode contributes
//! `sqrt(1 / (k r)) * exp(-j k r)` at every frequency bin, with `k` the scaled
//! wavenumber of that mode. The DC bin is always zero.

use std::sync::Arc;

pub use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::dispersion::DispersionModel;
use crate::error::{Error, Result};

/// Minimum damage-to-sensor distance in metres.
pub const R_MIN: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point2) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

impl From<[f64; 2]> for Point2 {
    fn from([x, y]: [f64; 2]) -> Self {
        Self { x, y }
    }
}

impl From<Point2> for [f64; 2] {
    fn from(p: Point2) -> Self {
        [p.x, p.y]
    }
}

/// Rectangular plate `[0, length] x [0, width]`, metres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Plate {
    pub length: f64,
    pub width: f64,
}

impl Default for Plate {
    fn default() -> Self {
        Self {
            length: 1.0,
            width: 1.0,
        }
    }
}

impl Plate {
    pub fn new(length: f64, width: f64) -> Result<Self> {
        if !(length > 0.0 && width > 0.0 && length.is_finite() && width.is_finite()) {
            return Err(Error::Geometry(format!(
                "plate dimensions must be positive, got {length} x {width}"
            )));
        }
        Ok(Self { length, width })
    }

    pub fn contains(&self, p: &Point2) -> bool {
        (0.0..=self.length).contains(&p.x) && (0.0..=self.width).contains(&p.y)
    }
}

/// Ordered transmitter/receiver index pair.
pub type SensorPair = (usize, usize);

/// Every ordered pair `(tx, rx)` with `tx != rx`, tx-major.
pub fn all_ordered_pairs(m: usize) -> Vec<SensorPair> {
    (0..m)
        .flat_map(|tx| (0..m).filter(move |&rx| rx != tx).map(move |rx| (tx, rx)))
        .collect()
}

/// Sensor positions and the pairs that are measured; a scene without damage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorLayout {
    pub plate: Plate,
    pub sensors: Vec<Point2>,
    pub pairs: Vec<SensorPair>,
}

impl SensorLayout {
    pub fn new(plate: Plate, sensors: Vec<Point2>, pairs: Vec<SensorPair>) -> Result<Self> {
        if let Some(s) = sensors.iter().find(|s| !plate.contains(s)) {
            return Err(Error::Geometry(format!(
                "sensor ({}, {}) outside the plate",
                s.x, s.y
            )));
        }
        if pairs.is_empty() {
            return Err(Error::Geometry("at least one sensor pair is required".into()));
        }
        for &(tx, rx) in &pairs {
            if tx >= sensors.len() || rx >= sensors.len() {
                return Err(Error::Index {
                    index: tx.max(rx),
                    len: sensors.len(),
                });
            }
            if tx == rx {
                return Err(Error::Geometry(format!("self pair ({tx}, {rx})")));
            }
        }
        Ok(Self {
            plate,
            sensors,
            pairs,
        })
    }

    /// Layout with all `m (m - 1)` ordered pairs.
    pub fn with_all_pairs(plate: Plate, sensors: Vec<Point2>) -> Result<Self> {
        let pairs = all_ordered_pairs(sensors.len());
        Self::new(plate, sensors, pairs)
    }

    pub fn num_pairs(&self) -> usize {
        self.pairs.len()
    }

    /// Smallest distance from `p` to any sensor.
    pub fn clearance(&self, p: &Point2) -> f64 {
        self.sensors
            .iter()
            .map(|s| s.distance(p))
            .fold(f64::INFINITY, f64::min)
    }

    /// Whether `p` is a legal damage position for this layout.
    pub fn admits_damage(&self, p: &Point2) -> bool {
        self.plate.contains(p) && self.clearance(p) >= R_MIN
    }

    /// Scatter path length for pair `pair_index` with damage at `damage`.
    pub fn path_length(&self, pair_index: usize, damage: &Point2) -> Result<f64> {
        let &(tx, rx) = self.pairs.get(pair_index).ok_or(Error::Index {
            index: pair_index,
            len: self.pairs.len(),
        })?;
        Ok(self.sensors[tx].distance(damage) + damage.distance(&self.sensors[rx]))
    }

    pub fn with_damage(&self, damage: Point2) -> Result<PlateScene> {
        PlateScene::new(self.clone(), damage)
    }
}

/// Sensor layout plus one damage location.
#[derive(Debug, Clone, PartialEq)]
pub struct PlateScene {
    layout: SensorLayout,
    damage: Point2,
}

impl PlateScene {
    pub fn new(layout: SensorLayout, damage: Point2) -> Result<Self> {
        if !layout.plate.contains(&damage) {
            return Err(Error::Geometry(format!(
                "damage ({}, {}) outside the plate",
                damage.x, damage.y
            )));
        }
        let clearance = layout.clearance(&damage);
        if clearance < R_MIN {
            return Err(Error::Geometry(format!(
                "damage is {clearance:.4} m from a sensor (minimum {R_MIN} m)"
            )));
        }
        Ok(Self { layout, damage })
    }

    pub fn layout(&self) -> &SensorLayout {
        &self.layout
    }

    pub fn damage(&self) -> Point2 {
        self.damage
    }

    pub fn num_pairs(&self) -> usize {
        self.layout.num_pairs()
    }

    pub fn scatter_path_length(&self, pair_index: usize) -> Result<f64> {
        self.layout.path_length(pair_index, &self.damage)
    }
}

/// `Q` equally spaced bins `f_q = q f_max / Q`, starting at DC.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrequencyGrid {
    q: usize,
    f_max: f64,
}

impl FrequencyGrid {
    pub fn new(q: usize, f_max: f64) -> Result<Self> {
        if q < 2 {
            return Err(Error::Domain(format!("frequency grid needs Q >= 2, got {q}")));
        }
        if !(f_max > 0.0 && f_max.is_finite()) {
            return Err(Error::Domain(format!("f_max must be positive, got {f_max}")));
        }
        Ok(Self { q, f_max })
    }

    pub fn len(&self) -> usize {
        self.q
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn f_max(&self) -> f64 {
        self.f_max
    }

    pub fn frequency(&self, bin: usize) -> f64 {
        bin as f64 * self.f_max / self.q as f64
    }

    pub fn omega(&self, bin: usize) -> f64 {
        2.0 * std::f64::consts::PI * self.frequency(bin)
    }

    /// Time step of the synthesized records, `1 / (2 f_max)`.
    pub fn dt(&self) -> f64 {
        0.5 / self.f_max
    }
}

/// Optional spectral shaping applied to every path before the inverse transform.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Excitation {
    /// Unit spectrum.
    #[default]
    Flat,
    /// Gaussian band-pass `exp(-(f - center)^2 / (2 width^2))`.
    Gaussian { center_hz: f64, width_hz: f64 },
}

impl Excitation {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Excitation::Flat => Ok(()),
            Excitation::Gaussian {
                center_hz,
                width_hz,
            } => {
                if width_hz > 0.0 && center_hz.is_finite() && width_hz.is_finite() {
                    Ok(())
                } else {
                    Err(Error::Domain(format!(
                        "gaussian excitation needs a positive width, got {width_hz}"
                    )))
                }
            }
        }
    }

    pub fn gain(&self, f: f64) -> f64 {
        match *self {
            Excitation::Flat => 1.0,
            Excitation::Gaussian {
                center_hz,
                width_hz,
            } => {
                let z = (f - center_hz) / width_hz;
                (-0.5 * z * z).exp()
            }
        }
    }
}

/// Complex spectrum, `Q` rows by `M` pair columns, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl SpectrumMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.cols + col]
    }

    pub fn set(&mut self, row: usize, col: usize, v: Complex64) {
        self.data[row * self.cols + col] = v;
    }

    pub fn column(&self, col: usize) -> Vec<Complex64> {
        (0..self.rows).map(|r| self.get(r, col)).collect()
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }
}

/// Real time-domain record, `Q` samples by `M` pair columns.
///
/// Storage is row-major, so the flat index of `(sample, pair)` is
/// `sample * M + pair`; this is also the network's feature order.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeMatrix {
    rows: usize,
    cols: usize,
    dt: f64,
    data: Vec<f64>,
}

impl TimeMatrix {
    pub fn zeros(rows: usize, cols: usize, dt: f64) -> Self {
        Self {
            rows,
            cols,
            dt,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_flat(rows: usize, cols: usize, dt: f64, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::shape(format!(
                "{} values cannot form a {rows} x {cols} matrix",
                data.len()
            )));
        }
        Ok(Self {
            rows,
            cols,
            dt,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    pub fn set(&mut self, row: usize, col: usize, v: f64) {
        self.data[row * self.cols + col] = v;
    }

    pub fn column(&self, col: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, col)).collect()
    }

    /// Flattened values in sample-major order.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_flat(self) -> Vec<f64> {
        self.data
    }

    /// Mean squared value over all entries.
    pub fn power(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>() / self.data.len() as f64
    }
}

/// Scaled wavenumbers for every mode at every bin, `[mode][bin]`.
fn wavenumber_table(grid: &FrequencyGrid, model: &DispersionModel) -> Result<Vec<Vec<f64>>> {
    (0..model.num_modes())
        .map(|n| {
            (0..grid.len())
                .map(|q| model.wavenumber(n, grid.omega(q)))
                .collect()
        })
        .collect()
}

/// Precomputed per-bin quantities for repeated path synthesis.
#[derive(Debug, Clone)]
pub struct PathSynthesizer {
    wavenumbers: Vec<Vec<f64>>,
    gains: Vec<f64>,
}

impl PathSynthesizer {
    pub fn new(grid: &FrequencyGrid, model: &DispersionModel, excitation: &Excitation) -> Result<Self> {
        excitation.validate()?;
        Ok(Self {
            wavenumbers: wavenumber_table(grid, model)?,
            gains: (0..grid.len()).map(|q| excitation.gain(grid.frequency(q))).collect(),
        })
    }

    pub fn bins(&self) -> usize {
        self.gains.len()
    }

    /// Writes the spectrum of one scatter path of length `r` into `out`.
    pub fn path_into(&self, r: f64, out: &mut [Complex64]) -> Result<()> {
        if !(r >= R_MIN) {
            return Err(Error::Geometry(format!(
                "path length {r} m is below the {R_MIN} m guard"
            )));
        }
        if out.len() != self.bins() {
            return Err(Error::shape(format!(
                "spectrum buffer has {} bins, grid has {}",
                out.len(),
                self.bins()
            )));
        }
        out[0] = Complex64::new(0.0, 0.0);
        for (q, slot) in out.iter_mut().enumerate().skip(1) {
            let mut acc = Complex64::new(0.0, 0.0);
            for ks in &self.wavenumbers {
                let kr = ks[q] * r;
                acc += Complex64::from_polar(kr.recip().sqrt(), -kr);
            }
            *slot = acc * self.gains[q];
        }
        Ok(())
    }

    pub fn path(&self, r: f64) -> Result<Vec<Complex64>> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.bins()];
        self.path_into(r, &mut out)?;
        Ok(out)
    }

    /// Spectrum of every pair column of `layout` with damage at `damage`.
    pub fn scene(&self, layout: &SensorLayout, damage: &Point2) -> Result<SpectrumMatrix> {
        let q = self.bins();
        let m = layout.num_pairs();
        let mut spec = SpectrumMatrix::zeros(q, m);
        let mut col = vec![Complex64::new(0.0, 0.0); q];
        for p in 0..m {
            self.path_into(layout.path_length(p, damage)?, &mut col)?;
            for (row, v) in col.iter().enumerate() {
                spec.data[row * m + p] = *v;
            }
        }
        Ok(spec)
    }
}

/// Scatter path length of pair `pair_index` in `scene`.
pub fn scatter_path_length(scene: &PlateScene, pair_index: usize) -> Result<f64> {
    scene.scatter_path_length(pair_index)
}

/// Scattered-path spectrum of every pair, flat excitation.
pub fn synthesize_spectrum(
    scene: &PlateScene,
    grid: &FrequencyGrid,
    model: &DispersionModel,
) -> Result<SpectrumMatrix> {
    synthesize_spectrum_with(scene, grid, model, &Excitation::Flat)
}

pub fn synthesize_spectrum_with(
    scene: &PlateScene,
    grid: &FrequencyGrid,
    model: &DispersionModel,
    excitation: &Excitation,
) -> Result<SpectrumMatrix> {
    PathSynthesizer::new(grid, model, excitation)?.scene(scene.layout(), &scene.damage())
}

/// One-sided inverse transform of single columns, truncated to `Q` samples:
/// `x[i] = (1/Q) * sum_q Re(X_q exp(+j 2 pi q i / (2Q)))`.
pub struct InverseTransform {
    q: usize,
    fft: Arc<dyn Fft<f64>>,
    buf: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl InverseTransform {
    pub fn new(q: usize) -> Self {
        let fft = FftPlanner::new().plan_fft_inverse(2 * q);
        let scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        Self {
            q,
            fft,
            buf: vec![Complex64::new(0.0, 0.0); 2 * q],
            scratch,
        }
    }

    pub fn len(&self) -> usize {
        self.q
    }

    pub fn is_empty(&self) -> bool {
        self.q == 0
    }

    /// Transforms `spectrum` (length `Q`) into `out` (length `Q`).
    pub fn column(&mut self, spectrum: &[Complex64], out: &mut [f64]) -> Result<()> {
        if spectrum.len() != self.q || out.len() != self.q {
            return Err(Error::shape(format!(
                "inverse transform of size {} got spectrum {} and output {}",
                self.q,
                spectrum.len(),
                out.len()
            )));
        }
        self.buf[..self.q].copy_from_slice(spectrum);
        self.buf[self.q..].fill(Complex64::new(0.0, 0.0));
        self.fft.process_with_scratch(&mut self.buf, &mut self.scratch);
        let scale = (self.q as f64).recip();
        for (o, v) in out.iter_mut().zip(&self.buf[..self.q]) {
            *o = v.re * scale;
        }
        Ok(())
    }
}

pub fn to_time_domain(spec: &SpectrumMatrix, grid: &FrequencyGrid) -> Result<TimeMatrix> {
    if spec.rows() != grid.len() {
        return Err(Error::shape(format!(
            "spectrum has {} rows, grid has {} bins",
            spec.rows(),
            grid.len()
        )));
    }
    let (q, m) = (spec.rows(), spec.cols());
    let mut inv = InverseTransform::new(q);
    let mut out = TimeMatrix::zeros(q, m, grid.dt());
    let mut col_out = vec![0.0; q];
    for p in 0..m {
        inv.column(&spec.column(p), &mut col_out)?;
        for (i, v) in col_out.iter().enumerate() {
            out.data[i * m + p] = *v;
        }
    }
    Ok(out)
}
