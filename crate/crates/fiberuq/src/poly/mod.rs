//! Multilevel weighted least-squares polynomial surrogates.

mod adaptive;
pub mod basis;
pub mod eval;
pub mod index;
pub mod lsq;
mod multilevel;
pub mod sampling;
pub mod surrogate;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ode::SolverError;

pub use basis::{legendre, legendre_table, ParamBox};
pub use index::{IndexSet, IndexSetKind, MultiIndex};
pub use lsq::{weighted_lsq, LsqSolution};
pub use multilevel::{fit_to_tolerance, multilevel_fit, CostReport, FitMode, FitOptions};
pub use sampling::{optimal_sample, SampleBatch};
pub use surrogate::Surrogate;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error("weighted Gram matrix is ill-conditioned (condition number {condition:e})")]
    IllConditioned { condition: f64 },
    #[error("{samples} samples cannot determine {basis} coefficients")]
    NotEnoughSamples { samples: usize, basis: usize },
    #[error("sample batch has no values")]
    MissingValues,
    #[error("point {0:?} lies outside the box")]
    OutsideBox(Vec<f64>),
    #[error("level {level}: {source}")]
    Level { level: usize, source: Box<FitError> },
    #[error("work budget exceeded: {needed:e} Euler steps required, cap is {cap:e}")]
    BudgetExceeded { needed: f64, cap: f64 },
    #[error("unsupported file: {0}")]
    SchemaMismatch(String),
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

/// A parametric model with discretization parameter `steps`.
pub trait ResponseModel: Sync {
    fn domain(&self) -> &ParamBox;

    /// Discretized response `Q_n(omega)` at a point of the box.
    fn response(&self, omega: &[f64], steps: usize) -> Result<f64, SolverError>;

    fn fingerprint(&self) -> String {
        String::new()
    }
}

/// Evaluates `Q_fine - Q_coarse` (or `Q_fine` alone) at every point in parallel.
pub fn evaluate_level<M: ResponseModel + ?Sized>(
    model: &M,
    points: &[f64],
    fine: usize,
    coarse: Option<usize>,
) -> Result<Vec<f64>, FitError> {
    let dim = model.domain().dim();
    points
        .par_chunks(dim)
        .map(|w| {
            let f = model.response(w, fine)?;
            Ok(match coarse {
                Some(c) => f - model.response(w, c)?,
                None => f,
            })
        })
        .collect()
}

/// Level and iteration specific seed derived from a base seed.
pub(crate) fn derive_seed(seed: u64, a: u64, b: u64) -> u64 {
    let mut x = seed ^ a.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ b.wrapping_mul(0xC2B2_AE3D_27D4_EB4F);
    x ^= x >> 33;
    x = x.wrapping_mul(0xFF51_AFD7_ED55_8CCD);
    x ^= x >> 33;
    x
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelSize {
    pub steps: usize,
    pub basis: usize,
    pub samples: usize,
}
