//! Per-feature z-scoring fitted on training vectors.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const STD_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub mean: Vec<f64>,
    /// Population standard deviation, floored at [`STD_FLOOR`].
    pub std: Vec<f64>,
}

impl Standardization {
    /// Fits mean and population std over equal-length feature vectors.
    pub fn fit<'a, I>(rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a [f64]>,
    {
        let mut iter = rows.into_iter().peekable();
        let dim = iter
            .peek()
            .map(|r| r.len())
            .ok_or_else(|| Error::Split("cannot fit standardization on zero vectors".into()))?;
        let mut sum = vec![0.0; dim];
        let mut lo = vec![f64::INFINITY; dim];
        let mut hi = vec![f64::NEG_INFINITY; dim];
        let mut rows_seen = Vec::new();
        for row in iter {
            if row.len() != dim {
                return Err(Error::shape(format!(
                    "feature vector of length {} among vectors of length {dim}",
                    row.len()
                )));
            }
            for (j, &v) in row.iter().enumerate() {
                sum[j] += v;
                lo[j] = lo[j].min(v);
                hi[j] = hi[j].max(v);
            }
            rows_seen.push(row);
        }
        let n = rows_seen.len() as f64;
        let mean: Vec<f64> = sum
            .iter()
            .zip(&lo)
            .zip(&hi)
            .map(|((s, &l), &h)| if l == h { l } else { s / n })
            .collect();
        let mut var = vec![0.0; dim];
        for row in &rows_seen {
            for ((acc, &v), &mu) in var.iter_mut().zip(row.iter()).zip(&mean) {
                let d = v - mu;
                *acc += d * d;
            }
        }
        let std = var.iter().map(|v| (v / n).sqrt().max(STD_FLOOR)).collect();
        Ok(Self { mean, std })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn apply(&self, features: &mut [f64]) -> Result<()> {
        if features.len() != self.dim() {
            return Err(Error::shape(format!(
                "standardization of dimension {} applied to {} features",
                self.dim(),
                features.len()
            )));
        }
        for ((v, mu), sd) in features.iter_mut().zip(&self.mean).zip(&self.std) {
            *v = (*v - mu) / sd;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.mean.len() != self.std.len() {
            return Err(Error::format("standardization mean/std lengths differ"));
        }
        if self.std.iter().any(|s| !(*s >= STD_FLOOR)) {
            return Err(Error::format("standardization std below floor"));
        }
        Ok(())
    }
}
