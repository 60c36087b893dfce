//! Surrogate statistics with their error bounds for both orientation models.

use fiberuq::experiments::{reference_statistics, surrogate_statistics, StatsSettings};
use fiberuq::fiber::FomModel;
use fiberuq::poly::{fit_to_tolerance, FitMode, FitOptions};
use fiberuq::{FiberProblem, ProblemConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let settings = StatsSettings { samples: 200_000, ..Default::default() };
    for model in [FomModel::Fte, FomModel::Iard] {
        let problem = FiberProblem::new(ProblemConfig::point(model))?;
        let reference = reference_statistics(&problem, &settings, None, false)?;
        let (s, _) = fit_to_tolerance(1e-3, &problem, FitMode::APriori, &FitOptions::default(), 42)?;
        let report = surrogate_statistics(&s, &problem, &settings, Some(&reference))?;
        println!("{model:?}");
        println!("  mean {:.6}  std {:.5e}", report.mean, report.std);
        println!("  F(0.953) = {:.5}  q(0.99) = {:.6}", report.cdf[0].1, report.quantile.1);
        for b in &report.bounds {
            println!("  {:<16} |error| {:.2e} <= {:.2e}: {}", b.statistic, b.abs_error, b.bound, b.pass);
        }
    }
    Ok(())
}
