//! Closed-form orientation evolution for constant velocity gradients under a
//! hybrid closure with fixed weight, via a 9x9 matrix exponential.

use crate::fiber::{
    iard_diffusion, rate_of_deformation, shear_rate, vorticity, FiberError, FomConfig, FomModel,
    OrientationTensor,
};
use crate::tensor::{expm, kron, mat_of_vec, vec_identity, vec_of_mat, Mat3, Mat9};

/// Smallest admissible trace before renormalization.
pub const MIN_TRACE: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticConfig {
    pub fom: FomConfig,
    pub l: Mat3,
    pub t: f64,
}

pub fn build_l_mapping(x: &Mat3) -> Mat9 {
    let id = Mat3::identity();
    let e = vec_identity();
    let vx = vec_of_mat(x);
    let tr = x.trace();
    Mat9::identity() * (tr / 7.0) + (kron(&id, x) + kron(x, &id)) * (2.0 / 7.0) + e * vx.transpose() / 7.0
        - vx * e.transpose() * (2.0 / 35.0)
        - e * e.transpose() * (tr / 35.0)
}

fn flow_part(fom: &FomConfig, l: &Mat3) -> (Mat3, f64, Mat9) {
    let d = rate_of_deformation(l);
    let lxi = vorticity(l) + d * fom.xi;
    let id = Mat3::identity();
    (d, shear_rate(&d), kron(&id, &lxi) + kron(&lxi, &id))
}

pub fn fte_system_matrix(fom: &FomConfig, l: &Mat3) -> Mat9 {
    let (d, gamma, m) = flow_part(fom, l);
    let e = vec_identity();
    let f = fom.closure.hybrid_weight();
    let mut m = m + (e * e.transpose() - Mat9::identity() * 3.0) * (2.0 * fom.c_i * gamma);
    if f != 1.0 {
        m -= build_l_mapping(&d) * (2.0 * fom.xi * (1.0 - f));
    }
    m
}

pub fn ard_system_matrix(fom: &FomConfig, l: &Mat3, c: &Mat3) -> Mat9 {
    let (d, gamma, m) = flow_part(fom, l);
    let e = vec_identity();
    let id = Mat3::identity();
    let f = fom.closure.hybrid_weight();
    let mut m = m + (vec_of_mat(c) * e.transpose() - Mat9::identity() * c.trace()) * (2.0 * gamma)
        - (kron(&id, c) + kron(c, &id)) * (5.0 * gamma);
    if f != 1.0 {
        let big_e = d * fom.xi - c * (5.0 * gamma);
        m -= build_l_mapping(&big_e) * (2.0 * (1.0 - f));
    }
    m
}

fn propagate(a0: &OrientationTensor, m: &Mat9, t: f64) -> Result<OrientationTensor, FiberError> {
    let v = expm(m, t)? * vec_of_mat(a0.matrix());
    let a = mat_of_vec(&v);
    let tr = a.trace();
    if !(tr > MIN_TRACE) {
        return Err(FiberError::InvalidOrientation(format!("trace {tr:e} before renormalization")));
    }
    Ok(OrientationTensor::new_unchecked(a / tr))
}

pub fn fte_analytic(a0: &OrientationTensor, cfg: &AnalyticConfig) -> Result<OrientationTensor, FiberError> {
    propagate(a0, &fte_system_matrix(&cfg.fom, &cfg.l), cfg.t)
}

pub fn ard_analytic(a0: &OrientationTensor, cfg: &AnalyticConfig, c: &Mat3) -> Result<OrientationTensor, FiberError> {
    propagate(a0, &ard_system_matrix(&cfg.fom, &cfg.l, c), cfg.t)
}

/// Dispatches on the model: Jeffery and FTE use the FTE form, ARD and iARD the
/// ARD form with the model's diffusion tensor.
pub fn analytic_solution(a0: &OrientationTensor, cfg: &AnalyticConfig) -> Result<OrientationTensor, FiberError> {
    match cfg.fom.model {
        FomModel::Jeffery => {
            let fom = FomConfig { c_i: 0.0, ..cfg.fom };
            fte_analytic(a0, &AnalyticConfig { fom, ..*cfg })
        }
        FomModel::Fte => fte_analytic(a0, cfg),
        FomModel::Ard => ard_analytic(a0, cfg, &(Mat3::identity() * cfg.fom.c_i)),
        FomModel::Iard => {
            let d = rate_of_deformation(&cfg.l);
            let c = iard_diffusion(&d, shear_rate(&d), cfg.fom.c_i, cfg.fom.c_m)?;
            ard_analytic(a0, cfg, &c)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fiber::ClosureKind;

    #[test]
    fn l_mapping_of_identity() {
        let m = build_l_mapping(&Mat3::identity());
        // 3/7 I + 4/7 I + 1/7 e e^T - 2/35 e e^T - 3/35 e e^T = I + 0 e e^T
        let want = Mat9::identity();
        assert!((m - want).amax() < 1e-15);
        assert_eq!(build_l_mapping(&Mat3::zeros()), Mat9::zeros());
    }

    #[test]
    fn zero_time_returns_initial() {
        let fom = FomConfig { model: FomModel::Fte, xi: 0.9, c_i: 0.01, c_m: 0.2, closure: ClosureKind::Hybrid(1.0) };
        let mut l = Mat3::zeros();
        l[(2, 1)] = 0.03;
        let a0 = OrientationTensor::isotropic();
        let a = fte_analytic(&a0, &AnalyticConfig { fom, l, t: 0.0 }).unwrap();
        assert_eq!(a.matrix(), a0.matrix());
        let still = fte_analytic(&a0, &AnalyticConfig { fom: FomConfig { c_i: 0.0, ..fom }, l: Mat3::zeros(), t: 50.0 }).unwrap();
        assert!((still.matrix() - a0.matrix()).amax() < 1e-15);
    }
}
