use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::index::IndexSet;
use super::lsq::weighted_lsq;
use super::sampling::{optimal_sample, sample_count};
use super::surrogate::Surrogate;
use super::{derive_seed, evaluate_level, FitError, LevelSize, ResponseModel};
use crate::ode::LevelSchedule;
use crate::stats::sobol::SobolSampler;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitMode {
    APriori,
    Adaptive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitOptions {
    /// Euler steps on the coarsest level.
    pub n0: usize,
    /// Samples per fit are `factor |L| max(1, ln |L|)`.
    pub sampling_factor: f64,
    /// A-priori mode designs for `safety * epsilon`.
    pub safety: f64,
    /// Cap on total Euler steps.
    pub max_work: f64,
    pub max_level: usize,
    pub max_degree: u32,
    pub pilot_points: usize,
    /// Adaptive mode: points used to estimate the approximation error.
    pub validation_points: usize,
    /// Adaptive mode: terms added per iteration, relative to the current total.
    pub growth: f64,
    pub max_iterations: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            n0: 20,
            sampling_factor: 2.0,
            safety: 0.005,
            max_work: 2e10,
            max_level: 16,
            max_degree: 60,
            pilot_points: 8,
            validation_points: 10_000,
            growth: 0.2,
            max_iterations: 400,
        }
    }
}

impl FitOptions {
    pub fn validate(&self) -> Result<(), FitError> {
        let ok = self.n0 >= 1
            && self.sampling_factor >= 1.0
            && self.safety > 0.0
            && self.safety <= 1.0
            && self.max_work > 0.0
            && self.pilot_points >= 2
            && self.validation_points >= 10
            && self.growth > 0.0;
        if ok { Ok(()) } else { Err(FitError::Invalid("invalid fit options".into())) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostReport {
    pub mode: Option<FitMode>,
    pub epsilon: Option<f64>,
    pub wall_time_s: f64,
    /// Euler steps spent, pilot runs and validation included.
    pub total_steps: u64,
    pub pilot_steps: u64,
    pub levels: Vec<LevelSize>,
    pub iterations: usize,
    pub estimated_error: Option<f64>,
}

impl CostReport {
    pub fn samples_per_level(&self) -> Vec<usize> {
        self.levels.iter().map(|l| l.samples).collect()
    }
}

pub(super) struct LevelFits {
    pub surrogate: Surrogate,
    pub sizes: Vec<LevelSize>,
    pub steps: u64,
}

pub(super) struct SingleFit {
    pub coeffs: Vec<f64>,
    pub size: LevelSize,
    pub steps: u64,
}

/// Least-squares fit of `Q_fine - Q_coarse` on `set` from fresh optimal samples.
pub(super) fn fit_one<M: ResponseModel + ?Sized>(
    model: &M,
    set: &IndexSet,
    fine: usize,
    coarse: Option<usize>,
    opts: &FitOptions,
    seed: u64,
) -> Result<SingleFit, FitError> {
    let count = sample_count(set.len(), opts.sampling_factor);
    let mut batch = optimal_sample(set, model.domain(), count, seed);
    batch.values = Some(evaluate_level(model, &batch.points, fine, coarse)?);
    let sol = weighted_lsq(&batch, set, model.domain())?;
    Ok(SingleFit {
        coeffs: sol.coeffs,
        size: LevelSize { steps: fine, basis: set.len(), samples: count },
        steps: (count * (fine + coarse.unwrap_or(0))) as u64,
    })
}

/// Fits every level on its own index set and sums the coefficients.
pub(super) fn fit_levels<M: ResponseModel + ?Sized>(
    levels: &[(usize, IndexSet)],
    model: &M,
    opts: &FitOptions,
    seed: u64,
) -> Result<LevelFits, FitError> {
    let domain = model.domain();
    let union = levels[0].1.clone();
    for w in levels.windows(2) {
        if !w[1].1.is_subset_of(&w[0].1) {
            return Err(FitError::Invalid("level index sets must be nested".into()));
        }
    }
    let predicted: f64 = levels
        .iter()
        .enumerate()
        .map(|(l, (n, set))| {
            let coarse = if l > 0 { levels[l - 1].0 } else { 0 };
            sample_count(set.len(), opts.sampling_factor) as f64 * (n + coarse) as f64
        })
        .sum();
    if predicted > opts.max_work {
        return Err(FitError::BudgetExceeded { needed: predicted, cap: opts.max_work });
    }
    let mut coeffs = vec![0.0; union.len()];
    let mut sizes = Vec::with_capacity(levels.len());
    let mut steps = 0u64;
    for (l, (n, set)) in levels.iter().enumerate() {
        let coarse = (l > 0).then(|| levels[l - 1].0);
        let fit = fit_one(model, set, *n, coarse, opts, derive_seed(seed, l as u64, 0))
            .map_err(|e| FitError::Level { level: l, source: Box::new(e) })?;
        for (idx, c) in set.indices().iter().zip(&fit.coeffs) {
            coeffs[union.position(idx).expect("nested sets")] += c;
        }
        steps += fit.steps;
        sizes.push(fit.size);
    }
    let surrogate = Surrogate::new(domain.clone(), union, coeffs)?.with_fingerprint(model.fingerprint());
    Ok(LevelFits { surrogate, sizes, steps })
}

/// Telescoping multilevel fit: level `l` fits `Q_l - Q_{l-1}` on the tensor
/// product space of degree `m_{L-l}`.
pub fn multilevel_fit<M: ResponseModel + ?Sized>(
    schedule: &LevelSchedule,
    model: &M,
    opts: &FitOptions,
    seed: u64,
) -> Result<(Surrogate, CostReport), FitError> {
    let start = Instant::now();
    let dim = model.domain().dim();
    let big_l = schedule.levels();
    let levels: Vec<(usize, IndexSet)> = (0..=big_l)
        .map(|l| (schedule.steps[l], IndexSet::tensor_product(dim, schedule.degrees[big_l - l] as u32)))
        .collect();
    let fits = fit_levels(&levels, model, opts, seed)?;
    let report = CostReport {
        mode: None,
        epsilon: None,
        wall_time_s: start.elapsed().as_secs_f64(),
        total_steps: fits.steps,
        pilot_steps: 0,
        levels: fits.sizes,
        iterations: 1,
        estimated_error: None,
    };
    Ok((fits.surrogate, report))
}

/// Builds a surrogate whose L2 error is designed to stay below `epsilon`.
pub fn fit_to_tolerance<M: ResponseModel + ?Sized>(
    epsilon: f64,
    model: &M,
    mode: FitMode,
    opts: &FitOptions,
    seed: u64,
) -> Result<(Surrogate, CostReport), FitError> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(FitError::Invalid("epsilon must lie in (0, 1]".into()));
    }
    opts.validate()?;
    match mode {
        FitMode::APriori => apriori_fit(epsilon, model, opts, seed),
        FitMode::Adaptive => super::adaptive::adaptive_fit(epsilon, model, opts, seed),
    }
}

/// Rate constants estimated from pilot runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PilotRates {
    /// `|Q - Q_n| ~ bias / n`
    pub bias: f64,
    /// `|(I - P_m) Q_0| ~ approx (m + 1)^-3`
    pub approx: f64,
    /// `|(I - P_m)(Q_l - Q_{l-1})| ~ diff (m + 1)^-3 / n_l`
    pub diff: f64,
}

pub const ALPHA: f64 = 3.0;
const PILOT_DEGREE: u32 = 3;

fn tail_energy(s: &Surrogate, below: u32) -> f64 {
    s.index_set()
        .indices()
        .iter()
        .zip(s.coeffs())
        .filter(|(i, _)| i.0.iter().any(|&k| k > below))
        .map(|(_, c)| c * c)
        .sum::<f64>()
        .sqrt()
}

pub(super) fn pilot_rates<M: ResponseModel + ?Sized>(
    model: &M,
    opts: &FitOptions,
    seed: u64,
) -> Result<(PilotRates, u64), FitError> {
    let domain = model.domain();
    let dim = domain.dim();
    let n0 = opts.n0;
    let mut sobol = SobolSampler::new(dim).map_err(|e| FitError::Invalid(e.to_string()))?;
    let mut pts = vec![0.0; opts.pilot_points * dim];
    for i in 0..opts.pilot_points {
        let u = sobol.next_point();
        domain.from_unit(&u, &mut pts[i * dim..(i + 1) * dim]);
    }
    let delta = evaluate_level(model, &pts, 8 * n0, Some(4 * n0))?;
    let rms = (delta.iter().map(|d| d * d).sum::<f64>() / delta.len() as f64).sqrt();
    let bias = 8.0 * n0 as f64 * rms;
    let set = IndexSet::tensor_product(dim, PILOT_DEGREE);
    let f0 = fit_one(model, &set, n0, None, opts, derive_seed(seed, 1000, 0))?;
    let fd = fit_one(model, &set, 2 * n0, Some(n0), opts, derive_seed(seed, 1000, 1))?;
    let scale = f64::from(PILOT_DEGREE).powf(ALPHA);
    let as_surrogate = |c: Vec<f64>| Surrogate::new(domain.clone(), set.clone(), c);
    let rates = PilotRates {
        bias,
        approx: tail_energy(&as_surrogate(f0.coeffs)?, PILOT_DEGREE - 1) * scale,
        diff: tail_energy(&as_surrogate(fd.coeffs)?, PILOT_DEGREE - 1) * scale * (2 * n0) as f64,
    };
    let steps = (opts.pilot_points * 12 * n0) as u64 + f0.steps + fd.steps;
    Ok((rates, steps))
}

fn degree_for(constant: f64, budget: f64, max_degree: u32) -> u32 {
    let mut m = 0;
    while m < max_degree && constant * f64::from(m + 1).powf(-ALPHA) > budget {
        m += 1;
    }
    m
}

/// Level count and per-level degrees meeting `target` under the rate model.
pub fn apriori_design(rates: &PilotRates, target: f64, opts: &FitOptions) -> Result<LevelSchedule, FitError> {
    let bias_budget = target / 2f64.sqrt();
    let mut big_l = 0;
    while rates.bias / ((opts.n0 << big_l) as f64) > bias_budget {
        big_l += 1;
        if big_l > opts.max_level {
            return Err(FitError::BudgetExceeded {
                needed: rates.bias / bias_budget,
                cap: (opts.n0 << opts.max_level) as f64,
            });
        }
    }
    let per_term = target / 2f64.sqrt() / ((big_l + 1) as f64).sqrt();
    let mut need: Vec<u32> = (0..=big_l)
        .map(|l| {
            if l == 0 {
                degree_for(rates.approx, per_term, opts.max_degree)
            } else {
                degree_for(rates.diff / (opts.n0 << l) as f64, per_term, opts.max_degree)
            }
        })
        .collect();
    for l in (0..big_l).rev() {
        need[l] = need[l].max(need[l + 1]);
    }
    let degrees = need.iter().rev().map(|&m| m as usize).collect();
    LevelSchedule::geometric(opts.n0, degrees).map_err(FitError::from)
}

fn apriori_fit<M: ResponseModel + ?Sized>(
    epsilon: f64,
    model: &M,
    opts: &FitOptions,
    seed: u64,
) -> Result<(Surrogate, CostReport), FitError> {
    let start = Instant::now();
    let (rates, pilot_steps) = pilot_rates(model, opts, seed)?;
    let schedule = apriori_design(&rates, opts.safety * epsilon, opts)?;
    let (surrogate, mut report) = multilevel_fit(&schedule, model, opts, seed)?;
    report.mode = Some(FitMode::APriori);
    report.epsilon = Some(epsilon);
    report.pilot_steps = pilot_steps;
    report.total_steps += pilot_steps;
    report.wall_time_s = start.elapsed().as_secs_f64();
    Ok((surrogate, report))
}
