// Negated float comparisons are used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod dataset;
pub mod dispersion;
pub mod error;
pub mod eval;
pub mod neuralloc;
pub mod physloc;
mod io_util;
pub mod rng;
pub mod standardize;
pub mod wavefield;

pub use error::{Error, Result};
pub use io_util::{sha256_file, sha256_hex};
