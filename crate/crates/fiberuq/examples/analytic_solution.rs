//! Closed-form orientation at the default material point, next to a fine Euler run.

use fiberuq::analytic::{analytic_solution, AnalyticConfig};
use fiberuq::fiber::{fractional_anisotropy, FomModel, OrientationTensor};
use fiberuq::ode::{euler_solve, SolverConfig};
use fiberuq::{FiberProblem, ProblemConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let omega = [565.0, 0.38];
    for model in [FomModel::Fte, FomModel::Iard] {
        let problem = FiberProblem::new(ProblemConfig::point(model))?;
        let (l, fom) = problem.setup(&omega)?;
        let t = problem.config().solver.t_end;
        let a0 = OrientationTensor::isotropic();
        let exact = analytic_solution(&a0, &AnalyticConfig { fom, l, t })?;
        let euler = euler_solve(&a0, &l, &fom, &SolverConfig { t_end: t, steps: 100_000, stabilize: false })?;
        println!("{model:?} at T = {} K, L_f = {} mm (xi = {:.6})", omega[0], omega[1], fom.xi);
        println!("  A(t_end) = {:.6}", exact.matrix());
        println!("  F(A) = {:.8}", fractional_anisotropy(&exact)?);
        println!("  |A_exact - A_euler|_F = {:.3e}", (exact.matrix() - euler.matrix()).norm());
    }
    Ok(())
}
