//! The fractional-anisotropy response as a function of the uncertain inputs.

use crate::analytic::{analytic_solution, AnalyticConfig};
use crate::config::{ConfigError, ProblemConfig};
use crate::fiber::{fractional_anisotropy, particle_shape_factor, FiberError, FiberGeometry, FomConfig, OrientationTensor};
use crate::ode::{euler_solve, SolverConfig, SolverError};
use crate::poly::{ParamBox, ResponseModel};
use crate::rheology::{cross_wlf_viscosity, hp_velocity_gradient};
use crate::tensor::Mat3;

/// Inputs are `(T, L_f)` at a material point, or `(T, L_f, x, y)` over the
/// whole channel.
#[derive(Debug, Clone)]
pub struct FiberProblem {
    config: ProblemConfig,
    domain: ParamBox,
    fingerprint: String,
}

impl FiberProblem {
    pub fn new(config: ProblemConfig) -> Result<Self, ConfigError> {
        config.validate()?;
        let d = &config.domain;
        let mut lows = vec![d.temperature[0], d.fiber_length[0]];
        let mut highs = vec![d.temperature[1], d.fiber_length[1]];
        if config.location.full_channel {
            lows.extend([0.0, 0.0]);
            highs.extend([config.channel.width, config.channel.height]);
        }
        let domain = ParamBox::new(lows, highs).map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(Self { fingerprint: config.fingerprint(), config, domain })
    }

    pub fn config(&self) -> &ProblemConfig {
        &self.config
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    /// Velocity gradient and model parameters at an input point.
    pub fn setup(&self, omega: &[f64]) -> Result<(Mat3, FomConfig), FiberError> {
        let c = &self.config;
        let (x, y) = if c.location.full_channel {
            (omega[2], omega[3])
        } else {
            (c.location.point[0], c.location.point[1])
        };
        let eta = cross_wlf_viscosity(omega[0], &c.viscosity)?;
        let l = hp_velocity_gradient(x, y, eta, &c.channel)?;
        let geometry = FiberGeometry { length: omega[1], diameter: c.fiber.diameter };
        let xi = particle_shape_factor(&geometry, c.fiber.aspect)?;
        Ok((l, c.fom.with_xi(xi)))
    }

    /// `Q_n(omega)`: fractional anisotropy after `steps` forward Euler steps.
    pub fn response(&self, omega: &[f64], steps: usize) -> Result<f64, SolverError> {
        let (l, fom) = self.setup(omega)?;
        let sc = SolverConfig { t_end: self.config.solver.t_end, steps, stabilize: self.config.solver.stabilize };
        let a = euler_solve(&OrientationTensor::isotropic(), &l, &fom, &sc)?;
        Ok(qoi(&a)?)
    }

    /// `Q(omega)` from the closed-form solution.
    pub fn exact_response(&self, omega: &[f64]) -> Result<f64, SolverError> {
        let (l, fom) = self.setup(omega)?;
        let cfg = AnalyticConfig { fom, l, t: self.config.solver.t_end };
        let a = analytic_solution(&OrientationTensor::isotropic(), &cfg)?;
        Ok(qoi(&a)?)
    }

    /// The exact response seen as a model that ignores the step count.
    pub fn exact(&self) -> ExactModel<'_> {
        ExactModel(self)
    }
}

fn qoi(a: &OrientationTensor) -> Result<f64, FiberError> {
    let m = a.matrix();
    fractional_anisotropy(&OrientationTensor::new_unchecked((m + m.transpose()) * 0.5))
}

impl ResponseModel for FiberProblem {
    fn domain(&self) -> &ParamBox {
        &self.domain
    }

    fn response(&self, omega: &[f64], steps: usize) -> Result<f64, SolverError> {
        FiberProblem::response(self, omega, steps)
    }

    fn fingerprint(&self) -> String {
        self.fingerprint.clone()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ExactModel<'a>(&'a FiberProblem);

impl ResponseModel for ExactModel<'_> {
    fn domain(&self) -> &ParamBox {
        &self.0.domain
    }

    fn response(&self, omega: &[f64], _steps: usize) -> Result<f64, SolverError> {
        self.0.exact_response(omega)
    }

    fn fingerprint(&self) -> String {
        format!("{}:exact", self.0.fingerprint)
    }
}

/// `Q_n(omega)` for a configuration.
pub fn response_surface(omega: &[f64], steps: usize, config: &ProblemConfig) -> Result<f64, SolverError> {
    FiberProblem::new(*config)
        .map_err(|e| SolverError::InvalidConfig(e.to_string()))?
        .response(omega, steps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fiber::FomModel;

    #[test]
    fn exact_response_in_plotted_range() {
        for model in [FomModel::Fte, FomModel::Iard] {
            let p = FiberProblem::new(ProblemConfig::point(model)).unwrap();
            let q = p.exact_response(&[565.0, 0.38]).unwrap();
            assert!((0.94..=0.96).contains(&q), "{q}");
        }
    }

    #[test]
    fn fine_euler_close_to_exact() {
        let p = FiberProblem::new(ProblemConfig::default()).unwrap();
        let w = [571.0, 0.25];
        assert!((p.response(&w, 1 << 14).unwrap() - p.exact_response(&w).unwrap()).abs() < 1e-4);
    }

    #[test]
    fn channel_inputs() {
        let p = FiberProblem::new(ProblemConfig::full_channel()).unwrap();
        assert_eq!(p.dim(), 4);
        let q = p.exact_response(&[565.0, 0.38, 2.0, 0.1]).unwrap();
        assert!((0.0..=1.0).contains(&q));
    }
}
