//! Mode dispersion curves and the multiplicative wavenumber uncertainty.
//!
//! Each mode maps angular frequency to wavenumber through a closed-form curve.
//! A single scale factor `alpha` multiplies every curve, which divides every
//! group velocity by the same factor.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

pub const ALPHA_MIN: f64 = 0.7;
pub const ALPHA_MAX: f64 = 1.3;
pub const ALPHA_MEAN: f64 = 1.0;
pub const ALPHA_STD: f64 = 1.0;
const ALPHA_MAX_REJECTIONS: usize = 10_000;

/// One propagating mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModeCurve {
    /// Nondispersive: `k = w / c`, with `c` in m/s.
    Linear { c: f64 },
    /// Flexural-like: `k = sqrt(w / d)`, with `d` in m²/s.
    #[serde(rename = "sqrt")]
    SquareRoot { d: f64 },
}

impl ModeCurve {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ModeCurve::Linear { c } if !(c > 0.0 && c.is_finite()) => {
                Err(Error::Domain(format!("linear mode needs c > 0, got {c}")))
            }
            ModeCurve::SquareRoot { d } if !(d > 0.0 && d.is_finite()) => {
                Err(Error::Domain(format!("sqrt mode needs d > 0, got {d}")))
            }
            _ => Ok(()),
        }
    }

    /// Unscaled wavenumber. `omega` must be non-negative.
    #[inline]
    pub fn wavenumber(&self, omega: f64) -> f64 {
        match *self {
            ModeCurve::Linear { c } => omega / c,
            ModeCurve::SquareRoot { d } => (omega / d).sqrt(),
        }
    }

    /// Unscaled group velocity `dw/dk`.
    #[inline]
    pub fn group_velocity(&self, omega: f64) -> f64 {
        match *self {
            ModeCurve::Linear { c } => c,
            ModeCurve::SquareRoot { d } => 2.0 * (d * omega).sqrt(),
        }
    }
}

/// A set of modes sharing one uncertainty scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispersionModel {
    modes: Vec<ModeCurve>,
    alpha: f64,
}

impl Default for DispersionModel {
    /// Two modes: a fast nondispersive one and a slow flexural one, `alpha = 1`.
    fn default() -> Self {
        Self {
            modes: default_modes(),
            alpha: 1.0,
        }
    }
}

pub fn default_modes() -> Vec<ModeCurve> {
    vec![
        ModeCurve::Linear { c: 5400.0 },
        ModeCurve::SquareRoot { d: 0.25 },
    ]
}

impl DispersionModel {
    pub fn new(modes: Vec<ModeCurve>, alpha: f64) -> Result<Self> {
        if modes.is_empty() {
            return Err(Error::Domain("dispersion model needs at least one mode".into()));
        }
        for m in &modes {
            m.validate()?;
        }
        check_alpha(alpha)?;
        Ok(Self { modes, alpha })
    }

    pub fn modes(&self) -> &[ModeCurve] {
        &self.modes
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn num_modes(&self) -> usize {
        self.modes.len()
    }

    /// Same curves, different scale.
    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(Self {
            modes: self.modes.clone(),
            alpha,
        })
    }

    fn mode(&self, mode_index: usize) -> Result<&ModeCurve> {
        self.modes.get(mode_index).ok_or(Error::Index {
            index: mode_index,
            len: self.modes.len(),
        })
    }

    /// Effective wavenumber `alpha * k_n(omega)` in rad/m.
    pub fn wavenumber(&self, mode_index: usize, omega: f64) -> Result<f64> {
        let mode = self.mode(mode_index)?;
        if !(omega >= 0.0) {
            return Err(Error::Domain(format!("omega must be >= 0, got {omega}")));
        }
        Ok(self.alpha * mode.wavenumber(omega))
    }

    /// Group velocity of the scaled curve, `dw/dk_eff`, in m/s.
    pub fn group_velocity(&self, mode_index: usize, omega: f64) -> Result<f64> {
        let mode = self.mode(mode_index)?;
        if !(omega >= 0.0) {
            return Err(Error::Domain(format!("omega must be >= 0, got {omega}")));
        }
        if omega == 0.0 && matches!(mode, ModeCurve::SquareRoot { .. }) {
            return Err(Error::Domain(
                "group velocity of a sqrt mode vanishes at omega = 0".into(),
            ));
        }
        Ok(mode.group_velocity(omega) / self.alpha)
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if (ALPHA_MIN..=ALPHA_MAX).contains(&alpha) {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "alpha must lie in [{ALPHA_MIN}, {ALPHA_MAX}], got {alpha}"
        )))
    }
}

/// Draws one uncertainty scale from the truncated Gaussian, seeded.
pub fn sample_alpha(rng_seed: u64) -> Result<f64> {
    sample_alpha_with(&mut rng_from_seed(rng_seed))
}

/// Rejection sampling from N(1, 1) restricted to [0.7, 1.3].
pub fn sample_alpha_with<R: Rng + ?Sized>(rng: &mut R) -> Result<f64> {
    let normal = Normal::new(ALPHA_MEAN, ALPHA_STD).expect("valid normal parameters");
    for _ in 0..=ALPHA_MAX_REJECTIONS {
        let a: f64 = normal.sample(rng);
        if (ALPHA_MIN..=ALPHA_MAX).contains(&a) {
            return Ok(a);
        }
    }
    Err(Error::Internal(format!(
        "alpha rejection sampling exceeded {ALPHA_MAX_REJECTIONS} rejections"
    )))
}
