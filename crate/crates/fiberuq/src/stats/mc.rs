use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{sorted, SampleSummary, StatsError};
use crate::poly::{evaluate_level, ResponseModel};

/// Plain Monte Carlo estimate with its cost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McRun {
    pub samples: usize,
    pub steps: usize,
    pub total_steps: u64,
    pub wall_time_s: f64,
    pub summary: SampleSummary,
    #[serde(skip)]
    pub sorted: Vec<f64>,
}

/// Evaluates `Q_steps` at `samples` independent uniform points of the box.
pub fn mc_baseline<M: ResponseModel + ?Sized>(
    model: &M,
    samples: usize,
    steps: usize,
    seed: u64,
    thresholds: &[f64],
    p: f64,
) -> Result<McRun, StatsError> {
    if samples == 0 || steps == 0 {
        return Err(StatsError::Invalid("sample and step counts must be positive".into()));
    }
    let start = Instant::now();
    let domain = model.domain();
    let dim = domain.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = vec![0.0; samples * dim];
    let mut u = vec![0.0; dim];
    for row in points.chunks_exact_mut(dim) {
        rng.fill(&mut u[..]);
        domain.from_unit(&u, row);
    }
    let values = sorted(evaluate_level(model, &points, steps, None)?);
    let summary = SampleSummary::from_sorted(&values, thresholds, p)?;
    Ok(McRun {
        samples,
        steps,
        total_steps: (samples * steps) as u64,
        wall_time_s: start.elapsed().as_secs_f64(),
        summary,
        sorted: values,
    })
}
