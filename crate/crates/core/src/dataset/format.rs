//! `GWDS0001` dataset files.
//!
//! Layout: 8-byte magic, little-endian `u64` header length, UTF-8 JSON header,
//! then `t` records of `Q*M` little-endian `f32` (network input), then `t`
//! clean records of the same size when `has_clean` is set, then `t` label
//! pairs `(x, y)` as `f32`. Features are flattened sample-major:
//! `index = q * M + pair`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{GenConfig, Split, WaveDataset, WaveSample};
use crate::dispersion::ModeCurve;
use crate::error::{Error, Result};
use crate::io_util::{read_f32_block, read_header, write_f32_block, write_header};
use crate::standardize::Standardization;
use crate::wavefield::{Excitation, FrequencyGrid, Plate, Point2, SensorLayout, SensorPair, TimeMatrix};

pub const DATASET_MAGIC: &[u8; 8] = b"GWDS0001";
pub const FLATTEN_ORDER: &str = "q-major: index = q * M + pair";

#[derive(Debug, Serialize, Deserialize)]
struct SampleMeta {
    alpha: f64,
    #[serde(with = "crate::io_util::snr_json")]
    snr_db: f64,
    seed: u64,
    label: Point2,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sensors: Option<Vec<Point2>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    q: usize,
    pairs_count: usize,
    sensors_count: usize,
    f_max: f64,
    plate: Plate,
    sensors: Vec<Point2>,
    pairs: Vec<SensorPair>,
    t: usize,
    flatten_order: String,
    modes: Vec<ModeCurve>,
    excitation: Excitation,
    split: Split,
    samples: Vec<SampleMeta>,
    standardization: Option<Standardization>,
    has_clean: bool,
    generation: GenConfig,
}

pub fn write_dataset(ds: &WaveDataset, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_dataset_to(ds, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn write_dataset_to<W: Write>(ds: &WaveDataset, w: &mut W) -> Result<()> {
    let q = ds.grid.len();
    let m = ds.layout.num_pairs();
    let has_clean = ds.has_clean();
    for (i, s) in ds.samples.iter().enumerate() {
        if s.data.rows() != q || s.data.cols() != m {
            return Err(Error::shape(format!(
                "sample {i} is {}x{}, dataset is {q}x{m}",
                s.data.rows(),
                s.data.cols()
            )));
        }
    }
    let header = Header {
        q,
        pairs_count: m,
        sensors_count: ds.layout.sensors.len(),
        f_max: ds.grid.f_max(),
        plate: ds.layout.plate,
        sensors: ds.layout.sensors.clone(),
        pairs: ds.layout.pairs.clone(),
        t: ds.samples.len(),
        flatten_order: FLATTEN_ORDER.to_string(),
        modes: ds.modes.clone(),
        excitation: ds.excitation,
        split: ds.split.clone(),
        samples: ds
            .samples
            .iter()
            .map(|s| SampleMeta {
                alpha: s.alpha,
                snr_db: s.snr_db,
                seed: s.seed,
                label: s.label,
                sensors: s.sensors.clone(),
            })
            .collect(),
        standardization: ds.standardization.clone(),
        has_clean,
        generation: ds.config.clone(),
    };
    write_header(w, DATASET_MAGIC, &header)?;
    for s in &ds.samples {
        write_f32_block(w, s.data.as_slice())?;
    }
    if has_clean {
        for s in &ds.samples {
            let clean = s.clean.as_ref().expect("checked by has_clean");
            if clean.rows() != q || clean.cols() != m {
                return Err(Error::shape("clean record shape differs from data"));
            }
            write_f32_block(w, clean.as_slice())?;
        }
    }
    for s in &ds.samples {
        write_f32_block(w, &[s.label.x, s.label.y])?;
    }
    Ok(())
}

pub fn read_dataset(path: impl AsRef<Path>) -> Result<WaveDataset> {
    let mut r = BufReader::new(File::open(path)?);
    read_dataset_from(&mut r)
}

pub fn read_dataset_from<R: Read>(r: &mut R) -> Result<WaveDataset> {
    let header: Header = read_header(r, DATASET_MAGIC)?;
    let grid = FrequencyGrid::new(header.q, header.f_max).map_err(|e| Error::format(e.to_string()))?;
    let layout = SensorLayout::new(header.plate, header.sensors, header.pairs)
        .map_err(|e| Error::format(format!("invalid sensor layout: {e}")))?;
    let (q, m, t) = (header.q, header.pairs_count, header.t);
    if layout.num_pairs() != m || layout.sensors.len() != header.sensors_count {
        return Err(Error::format("pair/sensor counts disagree with header lists"));
    }
    if header.samples.len() != t {
        return Err(Error::format(format!(
            "header declares {t} samples but lists {}",
            header.samples.len()
        )));
    }
    if header.flatten_order != FLATTEN_ORDER {
        return Err(Error::format(format!(
            "unsupported flatten order {:?}",
            header.flatten_order
        )));
    }
    header.split.validate(t).map_err(|e| Error::format(e.to_string()))?;
    if let Some(st) = &header.standardization {
        st.validate()?;
        if st.dim() != q * m {
            return Err(Error::format("standardization length differs from Q*M"));
        }
    }
    let dt = grid.dt();
    let mut data = Vec::with_capacity(t);
    for _ in 0..t {
        data.push(TimeMatrix::from_flat(q, m, dt, read_f32_block(r, q * m)?)?);
    }
    let mut clean = Vec::with_capacity(t);
    if header.has_clean {
        for _ in 0..t {
            clean.push(Some(TimeMatrix::from_flat(q, m, dt, read_f32_block(r, q * m)?)?));
        }
    } else {
        clean.resize(t, None);
    }
    let labels = read_f32_block(r, 2 * t)?;
    let mut trailing = [0u8; 1];
    if r.read(&mut trailing)? != 0 {
        return Err(Error::format("trailing bytes after dataset payload"));
    }

    let mut samples = Vec::with_capacity(t);
    for (i, ((meta, data), clean)) in header.samples.into_iter().zip(data).zip(clean).enumerate() {
        let (lx, ly) = (labels[2 * i], labels[2 * i + 1]);
        if lx != meta.label.x as f32 as f64 || ly != meta.label.y as f32 as f64 {
            return Err(Error::format(format!(
                "label of sample {i} disagrees between header and payload"
            )));
        }
        samples.push(WaveSample {
            data,
            clean,
            label: meta.label,
            alpha: meta.alpha,
            snr_db: meta.snr_db,
            seed: meta.seed,
            sensors: meta.sensors,
        });
    }
    Ok(WaveDataset {
        samples,
        grid,
        layout,
        modes: header.modes,
        excitation: header.excitation,
        split: header.split,
        standardization: header.standardization,
        config: header.generation,
    })
}
