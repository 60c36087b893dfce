//! Observed order of forward Euler on the fractional anisotropy.

use fiberuq::fiber::FomModel;
use fiberuq::{FiberProblem, ProblemConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let problem = FiberProblem::new(ProblemConfig::point(FomModel::Fte))?;
    let omega = [557.0, 0.47];
    let exact = problem.exact_response(&omega)?;
    println!("exact Q = {exact:.10}");
    let mut prev: Option<f64> = None;
    for k in 6..=12 {
        let n = 1usize << k;
        let err = (problem.response(&omega, n)? - exact).abs();
        match prev {
            Some(p) => println!("n = {n:5}  error {err:.3e}  order {:.3}", (p / err).log2()),
            None => println!("n = {n:5}  error {err:.3e}"),
        }
        prev = Some(err);
    }
    Ok(())
}
