//! Fiber orientation models: Jeffery, Folgar-Tucker and (improved) anisotropic
//! rotary diffusion, closures and scalar alignment measures.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rheology::ModelError;
use crate::tensor::{sym_eigenvalues, Mat3, TensorError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FiberError {
    #[error("not a valid orientation tensor: {0}")]
    InvalidOrientation(String),
    #[error("shear rate is zero; the iARD diffusion tensor is undefined")]
    DegenerateFlow,
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Tolerance used when validating orientation tensors.
pub const ORIENTATION_TOL: f64 = 1e-10;

/// Second-order fiber orientation tensor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrientationTensor(Mat3);

impl OrientationTensor {
    /// Validates symmetry, unit trace and positive semi-definiteness.
    pub fn new(a: Mat3) -> Result<Self, FiberError> {
        if !a.iter().all(|x| x.is_finite()) {
            return Err(FiberError::InvalidOrientation("non-finite entries".into()));
        }
        let asym = (a - a.transpose()).amax();
        if asym > ORIENTATION_TOL {
            return Err(FiberError::InvalidOrientation(format!("asymmetry {asym:e}")));
        }
        if (a.trace() - 1.0).abs() > ORIENTATION_TOL {
            return Err(FiberError::InvalidOrientation(format!("trace {}", a.trace())));
        }
        let ev = sym_eigenvalues(&a)?;
        if ev[2] < -ORIENTATION_TOL {
            return Err(FiberError::InvalidOrientation(format!("negative eigenvalue {:e}", ev[2])));
        }
        Ok(Self(a))
    }

    /// Wraps a matrix without checks, e.g. an intermediate time-stepping iterate.
    pub fn new_unchecked(a: Mat3) -> Self {
        Self(a)
    }

    pub fn isotropic() -> Self {
        Self(Mat3::identity() / 3.0)
    }

    pub fn matrix(&self) -> &Mat3 {
        &self.0
    }

    pub fn into_inner(self) -> Mat3 {
        self.0
    }
}

/// Fourth-order tensor stored densely, index `((i*3 + j)*3 + k)*3 + l`.
#[derive(Debug, Clone, PartialEq)]
pub struct FourthOrderTensor(pub [f64; 81]);

impl FourthOrderTensor {
    pub fn zeros() -> Self {
        Self([0.0; 81])
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.0[((i * 3 + j) * 3 + k) * 3 + l]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, l: usize, v: f64) {
        self.0[((i * 3 + j) * 3 + k) * 3 + l] = v;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind", content = "f")]
pub enum ClosureKind {
    Quadratic,
    Linear,
    /// `(1 - f) linear + f quadratic`
    Hybrid(f64),
}

impl ClosureKind {
    /// Weight of the quadratic part.
    pub fn hybrid_weight(&self) -> f64 {
        match *self {
            ClosureKind::Quadratic => 1.0,
            ClosureKind::Linear => 0.0,
            ClosureKind::Hybrid(f) => f,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FomModel {
    Jeffery,
    Fte,
    Ard,
    Iard,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FomConfig {
    pub model: FomModel,
    pub xi: f64,
    pub c_i: f64,
    pub c_m: f64,
    pub closure: ClosureKind,
}

impl FomConfig {
    pub fn validate(&self) -> Result<(), FiberError> {
        let bad = |m: &str| Err(FiberError::Model(ModelError::InvalidParameter(m.into())));
        if !(-1.0..=1.0).contains(&self.xi) {
            return bad("xi must lie in [-1, 1]");
        }
        if self.model != FomModel::Jeffery && !(self.c_i > 0.0) {
            return bad("c_i must be positive");
        }
        if !(0.0..=1.0).contains(&self.c_m) {
            return bad("c_m must lie in [0, 1]");
        }
        if !(0.0..=1.0).contains(&self.closure.hybrid_weight()) {
            return bad("hybrid closure weight must lie in [0, 1]");
        }
        Ok(())
    }

    /// Diffusion tensor `C` of the ARD family; ARD uses the isotropic `c_i I`.
    pub fn diffusion_tensor(&self, d: &Mat3, gamma: f64) -> Result<Mat3, FiberError> {
        match self.model {
            FomModel::Iard => iard_diffusion(d, gamma, self.c_i, self.c_m),
            _ => Ok(Mat3::identity() * self.c_i),
        }
    }
}

/// `C = c_i [I - 4 c_m (D / gamma)^2]`
pub fn iard_diffusion(d: &Mat3, gamma: f64, c_i: f64, c_m: f64) -> Result<Mat3, FiberError> {
    if !(gamma > 0.0) {
        return Err(FiberError::DegenerateFlow);
    }
    let dn = d / gamma;
    Ok((Mat3::identity() - dn * dn * (4.0 * c_m)) * c_i)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiberGeometry {
    /// mm
    pub length: f64,
    /// mm
    pub diameter: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum AspectMode {
    RawAspect,
    #[default]
    ZhangEquivalent,
}

pub fn rate_of_deformation(l: &Mat3) -> Mat3 {
    (l + l.transpose()) * 0.5
}

pub fn vorticity(l: &Mat3) -> Mat3 {
    (l - l.transpose()) * 0.5
}

pub fn shear_rate(d: &Mat3) -> f64 {
    (2.0 * (d * d).trace()).max(0.0).sqrt()
}

/// Equivalent ellipsoid aspect ratio of a cylinder (cubic fit of Zhang et al.).
pub fn zhang_equivalent_aspect(a: f64) -> f64 {
    0.000035 * a.powi(3) - 0.00467 * a.powi(2) + 0.764 * a + 0.404
}

pub fn particle_shape_factor(fg: &FiberGeometry, mode: AspectMode) -> Result<f64, FiberError> {
    if !(fg.length > 0.0 && fg.diameter > 0.0) {
        return Err(FiberError::Model(ModelError::InvalidParameter(
            "fiber length and diameter must be positive".into(),
        )));
    }
    let a = fg.length / fg.diameter;
    let r = match mode {
        AspectMode::RawAspect => a,
        AspectMode::ZhangEquivalent => zhang_equivalent_aspect(a),
    };
    let r2 = r * r;
    Ok((r2 - 1.0) / (r2 + 1.0))
}

fn delta(i: usize, j: usize) -> f64 {
    if i == j { 1.0 } else { 0.0 }
}

pub fn closure_fourth_order(a: &OrientationTensor, closure: ClosureKind) -> FourthOrderTensor {
    let a = a.matrix();
    let f = closure.hybrid_weight();
    let mut t = FourthOrderTensor::zeros();
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                for l in 0..3 {
                    let quad = a[(i, j)] * a[(k, l)];
                    let lin = -(delta(i, j) * delta(k, l) + delta(i, k) * delta(j, l) + delta(i, l) * delta(j, k))
                        / 35.0
                        + (a[(i, j)] * delta(k, l)
                            + a[(i, k)] * delta(j, l)
                            + a[(i, l)] * delta(j, k)
                            + a[(j, l)] * delta(i, k)
                            + a[(j, k)] * delta(i, l)
                            + a[(k, l)] * delta(i, j))
                            / 7.0;
                    let v = match closure {
                        ClosureKind::Quadratic => quad,
                        ClosureKind::Linear => lin,
                        ClosureKind::Hybrid(_) => (1.0 - f) * lin + f * quad,
                    };
                    t.set(i, j, k, l, v);
                }
            }
        }
    }
    t
}

/// `(t : m)_ij = t_ijkl m_kl`
pub fn contract_double(t: &FourthOrderTensor, m: &Mat3) -> Mat3 {
    Mat3::from_fn(|i, j| {
        let mut s = 0.0;
        for k in 0..3 {
            for l in 0..3 {
                s += t.get(i, j, k, l) * m[(k, l)];
            }
        }
        s
    })
}

/// `closure(a) : x` without forming the fourth-order tensor.
pub fn closure_contract(a: &Mat3, closure: ClosureKind, x: &Mat3) -> Mat3 {
    let f = closure.hybrid_weight();
    let ax = a.component_mul(x).sum();
    let quad = a * ax;
    if f == 1.0 {
        return quad;
    }
    let tr = x.trace();
    let xt = x.transpose();
    let id = Mat3::identity();
    let lin = -(id * tr + x + xt) / 35.0 + (a * tr + a * x + a * xt + x * a + xt * a + id * ax) / 7.0;
    if f == 0.0 { lin } else { lin * (1.0 - f) + quad * f }
}

/// Right-hand side of the orientation evolution equation.
pub fn fom_rhs(a: &OrientationTensor, l: &Mat3, cfg: &FomConfig) -> Result<Mat3, FiberError> {
    let d = rate_of_deformation(l);
    let w = vorticity(l);
    let gamma = shear_rate(&d);
    let c = match cfg.model {
        FomModel::Ard | FomModel::Iard => Some(cfg.diffusion_tensor(&d, gamma)?),
        _ => None,
    };
    Ok(rhs_with(a.matrix(), &d, &w, gamma, c.as_ref(), cfg))
}

/// Evaluates the right-hand side from precomputed flow quantities.
pub(crate) fn rhs_with(a: &Mat3, d: &Mat3, w: &Mat3, gamma: f64, c: Option<&Mat3>, cfg: &FomConfig) -> Mat3 {
    let jeffery = w * a - a * w + (d * a + a * d - closure_contract(a, cfg.closure, d) * 2.0) * cfg.xi;
    match cfg.model {
        FomModel::Jeffery => jeffery,
        FomModel::Fte => jeffery + (Mat3::identity() - a * 3.0) * (2.0 * cfg.c_i * gamma),
        FomModel::Ard | FomModel::Iard => {
            let c = c.copied().unwrap_or_else(|| Mat3::identity() * cfg.c_i);
            let diff = c * 2.0 - a * (2.0 * c.trace()) - (c * a + a * c) * 5.0
                + closure_contract(a, cfg.closure, &c) * 10.0;
            jeffery + diff * gamma
        }
    }
}

/// `sqrt(3/2) |lambda - 1/3| / |lambda|` over the eigenvalues of `a`.
pub fn fractional_anisotropy(a: &OrientationTensor) -> Result<f64, FiberError> {
    let ev = sym_eigenvalues(a.matrix())?;
    let num: f64 = ev.iter().map(|l| (l - 1.0 / 3.0).powi(2)).sum();
    let den: f64 = ev.iter().map(|l| l * l).sum();
    if den == 0.0 {
        return Err(FiberError::InvalidOrientation("zero tensor".into()));
    }
    Ok((1.5 * num / den).sqrt())
}
