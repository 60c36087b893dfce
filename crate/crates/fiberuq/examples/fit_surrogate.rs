//! Multilevel surrogate of the response at the default material point.

use fiberuq::experiments::l2_error;
use fiberuq::poly::{fit_to_tolerance, FitMode, FitOptions};
use fiberuq::{FiberProblem, ProblemConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let epsilon: f64 = std::env::args().nth(1).map_or(Ok(1e-3), |s| s.parse())?;
    let problem = FiberProblem::new(ProblemConfig::default())?;
    for mode in [FitMode::APriori, FitMode::Adaptive] {
        let (s, cost) = fit_to_tolerance(epsilon, &problem, mode, &FitOptions::default(), 42)?;
        let err = l2_error(&s, &problem, 10_000)?;
        println!("{mode:?}: {} terms, {} Euler steps, {:.2} s", s.index_set().len(), cost.total_steps, cost.wall_time_s);
        for level in &cost.levels {
            println!("  n = {:5}  basis {:4}  samples {:5}", level.steps, level.basis, level.samples);
        }
        println!("  E = {:.6}  std = {:.4e}  ||Q - Q_hat|| = {err:.3e} (target {epsilon:.1e})", s.mean(), s.variance().sqrt());
    }
    let path = std::env::temp_dir().join("fiberuq-example-surrogate.json");
    let (s, _) = fit_to_tolerance(epsilon, &problem, FitMode::APriori, &FitOptions::default(), 42)?;
    std::fs::write(&path, s.to_json()?)?;
    println!("wrote {}", path.display());
    Ok(())
}
