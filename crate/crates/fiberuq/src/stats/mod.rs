//! Statistics of surrogates and samples, error-bound checks and reference data.

pub mod kde;
pub mod mc;
pub mod reference;
pub mod sobol;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::poly::{FitError, ParamBox, Surrogate};
use crate::ode::SolverError;

pub use kde::{Bandwidth, KdeDensity};
pub use mc::{mc_baseline, McRun};
pub use reference::{atomic_write, ReferenceCache, ReferenceStatistics, CACHE_ENV};
pub use sobol::SobolSampler;

pub const REPORT_SCHEMA: &str = "fiberuq.stats/1";

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("{0}")]
    Invalid(String),
    #[error("degenerate sample: {0}")]
    Degenerate(String),
    #[error("cache i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("cache format: {0}")]
    Format(String),
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

pub fn mean_from_coeffs(s: &Surrogate) -> f64 {
    s.mean()
}

pub fn var_from_coeffs(s: &Surrogate) -> f64 {
    s.variance()
}

/// `n` Sobol points of the unit cube, row-major.
pub fn sobol_unit_points(dim: usize, n: usize) -> Result<Vec<f64>, StatsError> {
    Ok(SobolSampler::new(dim)?.take(n))
}

/// Surrogate values at the first `n` Sobol points.
pub fn qmc_surrogate_values(s: &Surrogate, n: usize) -> Result<Vec<f64>, StatsError> {
    let pts = sobol_unit_points(s.dim(), n)?;
    Ok(pts.par_chunks(s.dim() * 1024).flat_map_iter(|c| s.eval_unit_many(c)).collect())
}

/// Values of `f` at the first `n` Sobol points mapped to `domain`.
pub fn qmc_values<F, E>(domain: &ParamBox, n: usize, f: F) -> Result<Vec<f64>, StatsError>
where
    F: Fn(&[f64]) -> Result<f64, E> + Sync,
    StatsError: From<E>,
    E: Send,
{
    let dim = domain.dim();
    let pts = sobol_unit_points(dim, n)?;
    let out: Result<Vec<f64>, E> = pts
        .par_chunks(dim)
        .map_init(
            || vec![0.0; dim],
            |w, u| {
                domain.from_unit(u, w);
                f(w)
            },
        )
        .collect();
    Ok(out?)
}

/// Fraction of `sorted` values not exceeding `t`.
pub fn empirical_cdf(sorted: &[f64], t: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    sorted.partition_point(|&x| x <= t) as f64 / sorted.len() as f64
}

/// Lower quantile `inf { q : F(q) >= p }` of the empirical distribution.
pub fn empirical_quantile(sorted: &[f64], p: f64) -> Result<f64, StatsError> {
    if !(p > 0.0 && p < 1.0) {
        return Err(StatsError::Invalid("quantile probability must lie in (0, 1)".into()));
    }
    if sorted.is_empty() {
        return Err(StatsError::Degenerate("no samples".into()));
    }
    let n = sorted.len();
    let mut k = (p * n as f64).ceil() as usize;
    while k > 1 && (k - 1) as f64 / n as f64 >= p {
        k -= 1;
    }
    Ok(sorted[k.clamp(1, n) - 1])
}

/// Supremum distance between the empirical CDFs of two sorted samples.
pub fn ks_distance(a: &[f64], b: &[f64]) -> f64 {
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut sup: f64 = 0.0;
    while i < a.len() || j < b.len() {
        let x = match (a.get(i), b.get(j)) {
            (Some(&u), Some(&v)) => u.min(v),
            (Some(&u), None) => u,
            (None, Some(&v)) => v,
            (None, None) => break,
        };
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        sup = sup.max((i as f64 / na - j as f64 / nb).abs());
    }
    sup
}

pub fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

/// Root mean square of `a - b`.
pub fn rms_difference(a: &[f64], b: &[f64]) -> f64 {
    let s: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
    (s / a.len().max(1) as f64).sqrt()
}

/// Mean, standard deviation, CDF values and a quantile of a sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSummary {
    pub n: usize,
    pub mean: f64,
    /// `None` for a single sample.
    pub std: Option<f64>,
    pub cdf: Vec<(f64, f64)>,
    pub quantile: (f64, f64),
}

impl SampleSummary {
    pub fn from_sorted(sorted: &[f64], thresholds: &[f64], p: f64) -> Result<Self, StatsError> {
        let n = sorted.len();
        if n == 0 {
            return Err(StatsError::Degenerate("no samples".into()));
        }
        let mean = sorted.iter().sum::<f64>() / n as f64;
        let std = (n > 1).then(|| (sorted.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt());
        Ok(Self {
            n,
            mean,
            std,
            cdf: thresholds.iter().map(|&t| (t, empirical_cdf(sorted, t))).collect(),
            quantile: (p, empirical_quantile(sorted, p)?),
        })
    }
}

/// One statistic with its error against a reference and the error bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub statistic: String,
    pub estimate: f64,
    pub exact: f64,
    pub abs_error: f64,
    pub bound: f64,
    pub pass: bool,
}

impl BoundCheck {
    pub fn new(statistic: impl Into<String>, estimate: f64, exact: f64, bound: f64) -> Self {
        let abs_error = (estimate - exact).abs();
        Self { statistic: statistic.into(), estimate, exact, abs_error, bound, pass: abs_error <= bound }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatisticsReport {
    pub schema: String,
    pub mean: f64,
    pub std: f64,
    pub cdf: Vec<(f64, f64)>,
    pub quantile: (f64, f64),
    /// Estimated `||Q - Q_hat||`, when a reference is available.
    pub l2_error: Option<f64>,
    pub bounds: Vec<BoundCheck>,
}

impl StatisticsReport {
    /// Mean and standard deviation from coefficients, CDF and quantile from
    /// `n` Sobol evaluations.
    pub fn from_surrogate(s: &Surrogate, thresholds: &[f64], p: f64, n: usize) -> Result<(Self, Vec<f64>), StatsError> {
        let values = sorted(qmc_surrogate_values(s, n)?);
        let summary = SampleSummary::from_sorted(&values, thresholds, p)?;
        let report = Self {
            schema: REPORT_SCHEMA.into(),
            mean: s.mean(),
            std: s.variance().sqrt(),
            cdf: summary.cdf,
            quantile: summary.quantile,
            l2_error: None,
            bounds: Vec::new(),
        };
        Ok((report, values))
    }

    pub fn all_pass(&self) -> bool {
        self.bounds.iter().all(|b| b.pass)
    }

    /// CSV with columns statistic, estimate, exact, abs_error, bound, pass.
    pub fn to_csv(&self) -> Result<String, StatsError> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
        w.write_record(["statistic", "estimate", "exact", "abs_error", "bound", "pass"])
            .map_err(|e| StatsError::Format(e.to_string()))?;
        for b in &self.bounds {
            w.serialize(b).map_err(|e| StatsError::Format(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| StatsError::Format(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| StatsError::Format(e.to_string()))
    }
}

/// CDF error bound `3 (f_sup e)^(2/3)`.
pub fn cdf_bound(sup_density: f64, l2err: f64) -> f64 {
    3.0 * (sup_density * l2err).powf(2.0 / 3.0)
}

/// Quantile error bound `3 c^-1 (f_sup e)^(2/3)`.
pub fn quantile_bound(density_at_q: f64, sup_density: f64, l2err: f64) -> f64 {
    cdf_bound(sup_density, l2err) / density_at_q
}

/// Compares surrogate statistics with exact ones and attaches every bound.
///
/// `surrogate_sorted` are sorted surrogate values at the same Sobol points as
/// the reference sample, used for the supremum CDF error.
pub fn verify_bounds(
    report: &mut StatisticsReport,
    surrogate_sorted: &[f64],
    exact: &ReferenceStatistics,
    l2err: f64,
) -> Result<(), StatsError> {
    let fsup = exact.sup_density;
    let mut checks = vec![
        BoundCheck::new("mean", report.mean, exact.mean, l2err),
        BoundCheck::new("std", report.std, exact.std, l2err),
    ];
    for ((t, est), (_, ex)) in report.cdf.iter().zip(&exact.cdf) {
        checks.push(BoundCheck::new(format!("cdf({t})"), *est, *ex, cdf_bound(fsup, l2err)));
    }
    if !exact.sorted.is_empty() {
        let ks = ks_distance(surrogate_sorted, &exact.sorted);
        let mut c = BoundCheck::new("sup_cdf", ks, 0.0, cdf_bound(fsup, l2err));
        c.abs_error = ks;
        checks.push(c);
    }
    let (p, q) = report.quantile;
    checks.push(BoundCheck::new(
        format!("quantile({p})"),
        q,
        exact.quantile.1,
        quantile_bound(exact.density_at_q, fsup, l2err),
    ));
    report.l2_error = Some(l2err);
    report.bounds = checks;
    Ok(())
}
