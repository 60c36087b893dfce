//! Coarse surrogate over temperature, fiber length and channel position, with
//! its mean, spread and band-probability fields.

use fiberuq::channel::{field_statistics, FieldGrid};
use fiberuq::experiments::l2_error;
use fiberuq::poly::{fit_to_tolerance, FitMode, FitOptions};
use fiberuq::{FiberProblem, ProblemConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let epsilon: f64 = std::env::args().nth(1).map_or(Ok(3e-2), |s| s.parse())?;
    let problem = FiberProblem::new(ProblemConfig::full_channel())?;
    let (s, cost) = fit_to_tolerance(epsilon, &problem, FitMode::Adaptive, &FitOptions::default(), 42)?;
    println!("{} terms after {} iterations, ||Q - Q_hat|| = {:.3e}", s.index_set().len(), cost.iterations, l2_error(&s, &problem, 10_000)?);
    let grid = FieldGrid::new(50, 20, 5.0, 2.0)?;
    let f = field_statistics(&s, &grid, Some((0.85, 0.9, 4096)))?;
    let (lo, hi) = f.mean_range();
    println!("mean field in [{lo:.3}, {hi:.3}], largest std at {:?}", f.argmax_std());
    for j in (0..grid.ny).rev().step_by(4) {
        let row: String = (0..grid.nx).step_by(2).map(|i| shade(f.mean[i * grid.ny + j])).collect();
        println!("  {row}");
    }
    Ok(())
}

fn shade(v: f64) -> char {
    const RAMP: &[u8] = b" .:-=+*#%@";
    RAMP[((v.clamp(0.0, 1.0) * 9.0).round()) as usize] as char
}
