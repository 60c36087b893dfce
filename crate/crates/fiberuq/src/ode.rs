//! Forward Euler integration of the orientation equation and level schedules.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fiber::{
    rate_of_deformation, rhs_with, shear_rate, vorticity, FiberError, FomConfig, FomModel,
    OrientationTensor,
};
use crate::tensor::Mat3;

/// Entries above this magnitude are treated as a numerical blow-up.
pub const BLOWUP_LIMIT: f64 = 1e6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("Euler iteration blew up at step {step} of {steps}")]
    BlowUp { step: usize, steps: usize },
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Fiber(#[from] FiberError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub t_end: f64,
    pub steps: usize,
    pub stabilize: bool,
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        if self.steps == 0 || !(self.t_end > 0.0) {
            return Err(SolverError::InvalidConfig("need steps >= 1 and t_end > 0".into()));
        }
        Ok(())
    }
}

/// Projects onto symmetric, positive semi-definite, unit-trace matrices.
fn stabilize(a: &Mat3) -> Mat3 {
    let s = (a + a.transpose()) * 0.5;
    let eig = s.symmetric_eigen();
    let vals = eig.eigenvalues.map(|v| v.max(0.0));
    let total = vals.sum();
    if total <= 0.0 {
        return Mat3::identity() / 3.0;
    }
    let v = eig.eigenvectors;
    v * Mat3::from_diagonal(&(vals / total)) * v.transpose()
}

pub fn euler_solve(
    a0: &OrientationTensor,
    l: &Mat3,
    fom: &FomConfig,
    sc: &SolverConfig,
) -> Result<OrientationTensor, SolverError> {
    sc.validate()?;
    let d = rate_of_deformation(l);
    let w = vorticity(l);
    let gamma = shear_rate(&d);
    let c = match fom.model {
        FomModel::Ard | FomModel::Iard => Some(fom.diffusion_tensor(&d, gamma)?),
        _ => None,
    };
    let dt = sc.t_end / sc.steps as f64;
    let mut a = *a0.matrix();
    for step in 0..sc.steps {
        a += rhs_with(&a, &d, &w, gamma, c.as_ref(), fom) * dt;
        if sc.stabilize {
            a = stabilize(&a);
        }
        if !a.iter().all(|x| x.abs() <= BLOWUP_LIMIT) {
            return Err(SolverError::BlowUp { step: step + 1, steps: sc.steps });
        }
    }
    Ok(OrientationTensor::new_unchecked(a))
}

/// Discretization levels `n_l` with the polynomial degree parameters `m_l`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSchedule {
    pub steps: Vec<usize>,
    pub degrees: Vec<usize>,
}

impl LevelSchedule {
    pub fn new(steps: Vec<usize>, degrees: Vec<usize>) -> Result<Self, SolverError> {
        let bad = |m: &str| Err(SolverError::InvalidConfig(m.into()));
        if steps.is_empty() || steps.len() != degrees.len() {
            return bad("steps and degrees must be non-empty and of equal length");
        }
        if steps[0] == 0 || steps.windows(2).any(|w| w[0] >= w[1]) {
            return bad("step counts must be positive and strictly increasing");
        }
        if degrees.windows(2).any(|w| w[0] > w[1]) {
            return bad("degree parameters must be non-decreasing");
        }
        Ok(Self { steps, degrees })
    }

    /// `n_l = n0 2^l` for `l = 0..=levels`.
    pub fn geometric(n0: usize, degrees: Vec<usize>) -> Result<Self, SolverError> {
        let steps = (0..degrees.len()).map(|l| n0 << l).collect();
        Self::new(steps, degrees)
    }

    pub fn levels(&self) -> usize {
        self.steps.len() - 1
    }
}
