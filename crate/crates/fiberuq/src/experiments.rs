//! End-to-end experiments shared by the command line and the test suites.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::ChannelError;
use crate::config::ConfigError;
use crate::poly::{fit_to_tolerance, CostReport, FitError, FitMode, FitOptions, ResponseModel, Surrogate};
use crate::problem::FiberProblem;
use crate::stats::{
    ks_distance, mc_baseline, qmc_surrogate_values, qmc_values, rms_difference, sorted, verify_bounds,
    ReferenceCache, ReferenceStatistics, StatisticsReport, StatsError,
};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error("{0}")]
    Invalid(String),
}

/// Settings of the statistics post-processing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StatsSettings {
    pub thresholds: Vec<f64>,
    pub p: f64,
    /// Sobol points for CDF, quantile and the reference sample.
    pub samples: usize,
    /// Sobol points for the L2 error.
    pub l2_samples: usize,
}

impl Default for StatsSettings {
    fn default() -> Self {
        Self { thresholds: vec![0.953], p: 0.99, samples: 1_000_000, l2_samples: 10_000 }
    }
}

/// Exact-response statistics, computed once per problem and settings.
pub fn reference_statistics(
    problem: &FiberProblem,
    settings: &StatsSettings,
    cache: Option<&ReferenceCache>,
    force: bool,
) -> Result<ReferenceStatistics, ExperimentError> {
    let key = ReferenceCache::key(&format!(
        "{}|n={}|t={:?}|p={}",
        problem.config().canonical_json(),
        settings.samples,
        settings.thresholds,
        settings.p
    ));
    let compute = || {
        let values = qmc_values(problem.domain(), settings.samples, |w| problem.exact_response(w))?;
        ReferenceStatistics::from_values(values, &settings.thresholds, settings.p, &key)
    };
    Ok(match cache {
        Some(c) => c.get_or_compute(&key, force, compute)?,
        None => compute()?,
    })
}

/// `||Q - Q_hat||` by QMC over the surrogate's box.
pub fn l2_error(s: &Surrogate, problem: &FiberProblem, n: usize) -> Result<f64, ExperimentError> {
    let exact = qmc_values(s.domain(), n, |w| problem.exact_response(w))?;
    let approx = qmc_surrogate_values(s, n)?;
    Ok(rms_difference(&exact, &approx))
}

/// Surrogate statistics with every bound check attached when a reference is given.
pub fn surrogate_statistics(
    s: &Surrogate,
    problem: &FiberProblem,
    settings: &StatsSettings,
    reference: Option<&ReferenceStatistics>,
) -> Result<StatisticsReport, ExperimentError> {
    let (mut report, values) = StatisticsReport::from_surrogate(s, &settings.thresholds, settings.p, settings.samples)?;
    if let Some(r) = reference {
        let e = l2_error(s, problem, settings.l2_samples)?;
        verify_bounds(&mut report, &values, r, e)?;
    }
    Ok(report)
}

/// One row of a tolerance sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub epsilon: f64,
    pub l2_error: f64,
    pub total_steps: u64,
    pub wall_time_s: f64,
    pub report: StatisticsReport,
}

impl SweepRow {
    pub fn within_tolerance(&self) -> bool {
        self.l2_error <= self.epsilon
    }
}

/// `count` values log-spaced over `[lo, hi]`, descending.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![hi];
    }
    (0..count)
        .map(|k| {
            let t = k as f64 / (count - 1) as f64;
            (hi.ln() + t * (lo.ln() - hi.ln())).exp()
        })
        .collect()
}

pub fn tolerance_sweep(
    problem: &FiberProblem,
    epsilons: &[f64],
    mode: FitMode,
    opts: &FitOptions,
    settings: &StatsSettings,
    reference: &ReferenceStatistics,
    seed: u64,
) -> Result<Vec<SweepRow>, ExperimentError> {
    epsilons
        .iter()
        .map(|&eps| {
            let (s, cost) = fit_to_tolerance(eps, problem, mode, opts, seed)?;
            let report = surrogate_statistics(&s, problem, settings, Some(reference))?;
            Ok(SweepRow {
                epsilon: eps,
                l2_error: report.l2_error.unwrap_or(f64::NAN),
                total_steps: cost.total_steps,
                wall_time_s: cost.wall_time_s,
                report,
            })
        })
        .collect()
}

/// One Monte Carlo configuration of the cost comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McPoint {
    pub samples: usize,
    pub steps: usize,
    pub cost: u64,
    /// Supremum distance of the empirical CDF to the reference CDF.
    pub error: f64,
    pub mean_error: f64,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurrogatePoint {
    pub epsilon: f64,
    pub cost: u64,
    pub error: f64,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McComparison {
    pub schema: String,
    pub mc: Vec<McPoint>,
    pub surrogate: Vec<SurrogatePoint>,
    /// Slope of `log error` against `log cost` on the lower envelope of the MC cloud.
    pub slope: f64,
    pub target: f64,
    /// Cheapest MC configuration reaching the target error.
    pub cheapest_mc: Option<McPoint>,
    /// First surrogate (loosest tolerance) reaching the target error.
    pub surrogate_at_target: Option<SurrogatePoint>,
}

impl McComparison {
    pub fn surrogate_cheaper(&self) -> bool {
        match (&self.surrogate_at_target, &self.cheapest_mc) {
            (Some(s), Some(m)) => s.cost < m.cost,
            (Some(_), None) => true,
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McCompareSettings {
    pub sample_sizes: Vec<usize>,
    pub step_counts: Vec<usize>,
    pub target: f64,
    /// Surrogate tolerances tried, loosest first.
    pub epsilons: Vec<f64>,
}

impl Default for McCompareSettings {
    fn default() -> Self {
        let round = |v: Vec<f64>| v.into_iter().rev().map(|x| x.round() as usize).collect::<Vec<_>>();
        Self {
            sample_sizes: round(log_grid(1e1, 1e4, 10)),
            step_counts: round(log_grid(10f64.powf(1.3), 1e4, 15)),
            target: 1e-2,
            epsilons: log_grid(1e-4, 1e-2, 5),
        }
    }
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &(x, y) in points {
        let (lx, ly) = (x.ln(), y.ln());
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

/// Points not dominated by a cheaper point with smaller or equal error.
pub fn lower_envelope(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut p = points.to_vec();
    p.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let mut out: Vec<(f64, f64)> = Vec::new();
    for q in p {
        if out.last().is_none_or(|l| q.1 < l.1) {
            out.push(q);
        }
    }
    out
}

/// Monte Carlo error-versus-cost cloud and the surrogate path, both measured by
/// the supremum CDF distance to the reference and by Euler steps spent.
pub fn mc_compare(
    problem: &FiberProblem,
    settings: &McCompareSettings,
    opts: &FitOptions,
    reference: &ReferenceStatistics,
    seed: u64,
) -> Result<McComparison, ExperimentError> {
    let mut mc = Vec::new();
    for (a, &n_samples) in settings.sample_sizes.iter().enumerate() {
        for (b, &steps) in settings.step_counts.iter().enumerate() {
            let run = mc_baseline(
                problem,
                n_samples,
                steps,
                crate::poly::derive_seed(seed, a as u64 + 1, b as u64 + 1),
                &[],
                0.5,
            )?;
            mc.push(McPoint {
                samples: n_samples,
                steps,
                cost: run.total_steps,
                error: ks_distance(&run.sorted, &reference.sorted),
                mean_error: (run.summary.mean - reference.mean).abs(),
                wall_time_s: run.wall_time_s,
            });
        }
    }
    let cloud: Vec<(f64, f64)> = mc.iter().map(|m| (m.cost as f64, m.error)).collect();
    let slope = loglog_slope(&lower_envelope(&cloud));
    let cheapest_mc = mc.iter().filter(|m| m.error <= settings.target).min_by_key(|m| m.cost).cloned();

    let n = reference.sorted.len();
    let mut surrogate = Vec::new();
    let mut surrogate_at_target = None;
    for &eps in &settings.epsilons {
        let (s, cost): (Surrogate, CostReport) = fit_to_tolerance(eps, problem, FitMode::APriori, opts, seed)?;
        let values = sorted(qmc_surrogate_values(&s, n)?);
        let point = SurrogatePoint {
            epsilon: eps,
            cost: cost.total_steps,
            error: ks_distance(&values, &reference.sorted),
            wall_time_s: cost.wall_time_s,
        };
        surrogate.push(point.clone());
        if point.error <= settings.target {
            surrogate_at_target = Some(point);
            break;
        }
    }
    Ok(McComparison {
        schema: "fiberuq.mc-compare/1".into(),
        mc,
        surrogate,
        slope,
        target: settings.target,
        cheapest_mc,
        surrogate_at_target,
    })
}
