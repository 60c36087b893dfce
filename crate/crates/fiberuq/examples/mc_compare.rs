//! Monte Carlo error against cost on a small grid, next to the surrogate.

use fiberuq::experiments::{mc_compare, reference_statistics, McCompareSettings, StatsSettings};
use fiberuq::poly::FitOptions;
use fiberuq::{FiberProblem, ProblemConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let problem = FiberProblem::new(ProblemConfig::default())?;
    let reference = reference_statistics(&problem, &StatsSettings { samples: 100_000, ..Default::default() }, None, false)?;
    let settings = McCompareSettings {
        sample_sizes: vec![10, 100, 1000],
        step_counts: vec![20, 80, 320],
        target: 3e-2,
        epsilons: vec![1e-2, 1e-3],
    };
    let cmp = mc_compare(&problem, &settings, &FitOptions::default(), &reference, 7)?;
    for m in &cmp.mc {
        println!("MC N = {:5} n = {:4}: cost {:9}  KS error {:.3e}", m.samples, m.steps, m.cost, m.error);
    }
    for s in &cmp.surrogate {
        println!("surrogate eps = {:.0e}: cost {:9}  KS error {:.3e}", s.epsilon, s.cost, s.error);
    }
    println!("error-cost slope {:.3}, surrogate cheaper at {:.0e}: {}", cmp.slope, cmp.target, cmp.surrogate_cheaper());
    Ok(())
}
