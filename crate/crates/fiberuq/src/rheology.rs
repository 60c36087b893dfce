//! Cross-WLF viscosity and Hagen-Poiseuille flow in a rectangular channel.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

use crate::tensor::Mat3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("temperature {0} K is at or below the glass transition temperature {1} K")]
    BelowGlassTransition(f64, f64),
    #[error("point ({0}, {1}) lies outside the channel")]
    OutsideChannel(f64, f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

fn require(cond: bool, msg: &str) -> Result<(), ModelError> {
    if cond {
        Ok(())
    } else {
        Err(ModelError::InvalidParameter(msg.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CrossWlfParams {
    pub n: f64,
    /// Pa
    pub tau_star: f64,
    /// K
    pub t_star: f64,
    /// Pa s
    pub d_coef: f64,
    pub a1: f64,
    /// K
    pub a2: f64,
    /// 1/s, the fixed shear rate used for viscosity only
    pub gamma_dot: f64,
}

impl Default for CrossWlfParams {
    fn default() -> Self {
        Self {
            n: 0.3267,
            tau_star: 123991.0,
            t_star: 323.15,
            d_coef: 2.06635e15,
            a1: 36.07,
            a2: 51.6,
            gamma_dot: 1.0,
        }
    }
}

impl CrossWlfParams {
    pub fn validate(&self) -> Result<(), ModelError> {
        require(self.tau_star > 0.0, "tau_star must be positive")?;
        require(self.a2 > 0.0, "A2 must be positive")?;
        require(self.d_coef > 0.0, "D coefficient must be positive")?;
        require(self.n > 0.0 && self.n < 1.0, "n must lie in (0, 1)")?;
        require(self.gamma_dot > 0.0, "gamma_dot must be positive")?;
        require(self.t_star.is_finite() && self.a1.is_finite(), "non-finite parameter")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChannelGeometry {
    /// mm
    pub width: f64,
    /// mm
    pub height: f64,
    /// Pa
    pub pressure_gradient: f64,
    pub series_terms: usize,
}

impl Default for ChannelGeometry {
    fn default() -> Self {
        Self {
            width: 5.0,
            height: 2.0,
            pressure_gradient: 10.0,
            series_terms: 10,
        }
    }
}

impl ChannelGeometry {
    pub fn validate(&self) -> Result<(), ModelError> {
        require(self.width > 0.0 && self.height > 0.0, "channel width and height must be positive")?;
        require(self.series_terms >= 1, "series_terms must be at least 1")?;
        require(self.pressure_gradient.is_finite(), "non-finite pressure gradient")
    }

    fn check_point(&self, x: f64, y: f64) -> Result<(), ModelError> {
        if (0.0..=self.width).contains(&x) && (0.0..=self.height).contains(&y) {
            Ok(())
        } else {
            Err(ModelError::OutsideChannel(x, y))
        }
    }
}

pub fn zero_shear_viscosity(t: f64, p: &CrossWlfParams) -> Result<f64, ModelError> {
    if !(t > p.t_star) {
        return Err(ModelError::BelowGlassTransition(t, p.t_star));
    }
    let dt = t - p.t_star;
    Ok(p.d_coef * (-p.a1 * dt / (p.a2 + dt)).exp())
}

pub fn cross_wlf_viscosity(t: f64, p: &CrossWlfParams) -> Result<f64, ModelError> {
    let eta0 = zero_shear_viscosity(t, p)?;
    Ok(eta0 / (1.0 + (eta0 * p.gamma_dot / p.tau_star).powf(1.0 - p.n)))
}

/// `cosh(b u) / cosh(b c)` and `sinh(b u) / cosh(b c)` for |u| <= c without overflow.
fn hyperbolic_ratios(b: f64, u: f64, c: f64) -> (f64, f64) {
    let au = u.abs();
    let lead = (b * (au - c)).exp() / (1.0 + (-2.0 * b * c).exp());
    let tail = (-2.0 * b * au).exp();
    (lead * (1.0 + tail), u.signum() * lead * (1.0 - tail))
}

fn series_prefactor(eta: f64, g: &ChannelGeometry) -> Result<f64, ModelError> {
    require(eta > 0.0 && eta.is_finite(), "viscosity must be positive")?;
    Ok(4.0 * g.pressure_gradient * g.height * g.height / (eta * PI.powi(3)))
}

pub fn hp_velocity(x: f64, y: f64, eta: f64, g: &ChannelGeometry) -> Result<f64, ModelError> {
    g.check_point(x, y)?;
    let pre = series_prefactor(eta, g)?;
    let half = g.width / 2.0;
    let mut sum = 0.0;
    for i in 1..=g.series_terms {
        let k = (2 * i - 1) as f64;
        let beta = PI * k / g.height;
        let (ch, _) = hyperbolic_ratios(beta, x - half, half);
        sum += (1.0 - ch) * (beta * y).sin() / k.powi(3);
    }
    Ok(pre * sum)
}

/// Velocity gradient of the axial flow; only entries (3,1) and (3,2) are nonzero.
pub fn hp_velocity_gradient(x: f64, y: f64, eta: f64, g: &ChannelGeometry) -> Result<Mat3, ModelError> {
    g.check_point(x, y)?;
    let pre = series_prefactor(eta, g)?;
    let half = g.width / 2.0;
    let (mut dx, mut dy) = (0.0, 0.0);
    for i in 1..=g.series_terms {
        let k = (2 * i - 1) as f64;
        let beta = PI * k / g.height;
        let (ch, sh) = hyperbolic_ratios(beta, x - half, half);
        let k3 = k.powi(3);
        dx -= beta * sh * (beta * y).sin() / k3;
        dy += beta * (1.0 - ch) * (beta * y).cos() / k3;
    }
    let mut l = Mat3::zeros();
    l[(2, 0)] = pre * dx;
    l[(2, 1)] = pre * dy;
    Ok(l)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_velocity(x: f64, y: f64, eta: f64, g: &ChannelGeometry) -> f64 {
        let w = g.width;
        let h = g.height;
        let mut s = 0.0;
        for i in 1..=g.series_terms {
            let k = (2 * i - 1) as f64;
            let b = PI * k / h;
            s += (1.0 - (b * (x - w / 2.0)).cosh() / (b * w / 2.0).cosh()) * (b * y).sin() / k.powi(3);
        }
        4.0 * g.pressure_gradient * h * h / (eta * PI.powi(3)) * s
    }

    #[test]
    fn viscosity_at_565() {
        let p = CrossWlfParams::default();
        let dt: f64 = 565.0 - 323.15;
        let eta0: f64 = 2.06635e15 * (-36.07 * dt / (51.6 + dt)).exp();
        let eta = eta0 / (1.0 + (eta0 / 123991.0).powf(1.0 - 0.3267));
        assert!((zero_shear_viscosity(565.0, &p).unwrap() - eta0).abs() < 1e-12 * eta0);
        assert!((cross_wlf_viscosity(565.0, &p).unwrap() - eta).abs() < 1e-12 * eta);
        assert!((eta - 250.06).abs() < 0.01);
    }

    #[test]
    fn viscosity_limits() {
        let p = CrossWlfParams::default();
        let near = zero_shear_viscosity(p.t_star + 1e-12, &p).unwrap();
        assert!((near - p.d_coef).abs() < 1e-9 * p.d_coef);
        assert!(zero_shear_viscosity(560.0, &p).unwrap() > zero_shear_viscosity(570.0, &p).unwrap());
        assert!(matches!(
            zero_shear_viscosity(300.0, &p),
            Err(ModelError::BelowGlassTransition(..))
        ));
        let tiny = CrossWlfParams { gamma_dot: 1e-30, ..p };
        let (e0, e) = (zero_shear_viscosity(565.0, &tiny).unwrap(), cross_wlf_viscosity(565.0, &tiny).unwrap());
        assert!((e0 - e).abs() < 1e-12 * e0);
    }

    #[test]
    fn velocity_matches_direct_series() {
        let g = ChannelGeometry::default();
        for &(x, y) in &[(2.5, 1.0), (2.0, 0.1), (0.3, 1.7), (4.9, 0.4)] {
            let v = hp_velocity(x, y, 250.0, &g).unwrap();
            let r = naive_velocity(x, y, 250.0, &g);
            assert!((v - r).abs() < 1e-13 * r.abs().max(1e-300));
        }
    }

    #[test]
    fn velocity_boundaries_and_center() {
        let g = ChannelGeometry::default();
        for x in [0.0, 1.3, 2.5, 5.0] {
            assert!(hp_velocity(x, 0.0, 250.0, &g).unwrap().abs() < 1e-15);
            assert!(hp_velocity(x, 2.0, 250.0, &g).unwrap().abs() < 1e-15);
        }
        assert!(hp_velocity(0.0, 1.0, 250.0, &g).unwrap().abs() < 1e-15);
        let l = hp_velocity_gradient(2.5, 1.0, 250.0, &g).unwrap();
        assert_eq!(l[(2, 0)], 0.0);
        let big = ChannelGeometry { series_terms: 200, ..g };
        let a = hp_velocity(2.5, 1.0, 250.0, &g).unwrap();
        let b = hp_velocity(2.5, 1.0, 250.0, &big).unwrap();
        assert!((a - b).abs() < 5e-3 * b);
        assert!(hp_velocity(5.1, 1.0, 250.0, &g).is_err());
        assert!(hp_velocity_gradient(1.0, -0.1, 250.0, &g).is_err());
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let g = ChannelGeometry::default();
        let eta = cross_wlf_viscosity(565.0, &CrossWlfParams::default()).unwrap();
        let l = hp_velocity_gradient(2.0, 0.1, eta, &g).unwrap();
        let h = 1e-6;
        let fx = (hp_velocity(2.0 + h, 0.1, eta, &g).unwrap() - hp_velocity(2.0 - h, 0.1, eta, &g).unwrap()) / (2.0 * h);
        let fy = (hp_velocity(2.0, 0.1 + h, eta, &g).unwrap() - hp_velocity(2.0, 0.1 - h, eta, &g).unwrap()) / (2.0 * h);
        assert!((l[(2, 0)] - fx).abs() < 1e-6 * fx.abs());
        assert!((l[(2, 1)] - fy).abs() < 1e-6 * fy.abs());
        assert!((l[(2, 1)] - 0.03441394).abs() < 1e-7);
        for (i, v) in l.iter().enumerate() {
            if i != 2 && i != 5 {
                assert_eq!(*v, 0.0);
            }
        }
    }
}
