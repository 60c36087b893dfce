use std::collections::{HashMap, HashSet};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::eval::BasisEvaluator;
use super::index::{IndexSet, MultiIndex};
use super::lsq::weighted_lsq;
use super::multilevel::{CostReport, FitMode, FitOptions};
use super::sampling::{optimal_sample, sample_count};
use super::surrogate::Surrogate;
use super::{derive_seed, evaluate_level, FitError, LevelSize, ResponseModel};

struct Level {
    steps: usize,
    set: IndexSet,
    coeffs: Vec<f64>,
    /// Unit-cube sample points, weights and residuals of the last fit.
    points: Vec<f64>,
    weights: Vec<f64>,
    residuals: Vec<f64>,
    dirty: bool,
    refits: u64,
}

impl Level {
    fn new(steps: usize, set: IndexSet) -> Self {
        Self {
            steps,
            set,
            coeffs: Vec::new(),
            points: Vec::new(),
            weights: Vec::new(),
            residuals: Vec::new(),
            dirty: true,
            refits: 0,
        }
    }
}

struct Scored {
    profit: f64,
    significant: bool,
    index: MultiIndex,
}

/// Greedy multilevel fit: grows per-level index sets and the number of
/// levels by estimated error reduction per unit of work until the estimated
/// L2 error drops below `epsilon`.
pub(super) fn adaptive_fit<M: ResponseModel + ?Sized>(
    epsilon: f64,
    model: &M,
    opts: &FitOptions,
    seed: u64,
) -> Result<(Surrogate, CostReport), FitError> {
    let start = Instant::now();
    let domain = model.domain().clone();
    let dim = domain.dim();
    let mut work = 0u64;
    let mut levels = vec![
        Level::new(opts.n0, IndexSet::total_degree(dim, 1)),
        Level::new(2 * opts.n0, IndexSet::total_degree(dim, 0)),
    ];

    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0xADA, 0));
    let nv = opts.validation_points;
    let mut val_unit = vec![0.0; nv * dim];
    rng.fill(&mut val_unit[..]);
    let mut val_points = vec![0.0; nv * dim];
    for i in 0..nv {
        domain.from_unit(&val_unit[i * dim..(i + 1) * dim], &mut val_points[i * dim..(i + 1) * dim]);
    }
    let mut val_cache: HashMap<usize, Vec<f64>> = HashMap::new();

    let mut iteration = 0;
    loop {
        iteration += 1;
        for (l, level) in levels.iter_mut().enumerate() {
            if !level.dirty {
                continue;
            }
            let coarse = (l > 0).then(|| level.steps / 2);
            let count = sample_count(level.set.len(), opts.sampling_factor);
            let mut batch = optimal_sample(&level.set, &domain, count, derive_seed(seed, l as u64, level.refits + 1));
            let values = evaluate_level(model, &batch.points, level.steps, coarse)
                .map_err(|e| FitError::Level { level: l, source: Box::new(e) })?;
            work += (count * (level.steps + coarse.unwrap_or(0))) as u64;
            batch.values = Some(values.clone());
            let sol = weighted_lsq(&batch, &level.set, &domain)
                .map_err(|e| FitError::Level { level: l, source: Box::new(e) })?;
            let eval = BasisEvaluator::new(&level.set);
            let mut scratch = eval.scratch();
            let mut unit = vec![0.0; count * dim];
            let mut residuals = vec![0.0; count];
            for i in 0..count {
                let u = &mut unit[i * dim..(i + 1) * dim];
                domain.to_unit_unchecked(batch.point(i), u);
                residuals[i] = values[i] - eval.dot_unit(u, &sol.coeffs, &mut scratch);
            }
            level.coeffs = sol.coeffs;
            level.points = unit;
            level.weights = batch.weights;
            level.residuals = residuals;
            level.dirty = false;
            level.refits += 1;
        }

        let surrogate = assemble(&domain, &levels)?.with_fingerprint(model.fingerprint());
        let finest = levels.last().expect("levels").steps;
        for steps in [finest, finest / 2] {
            if !val_cache.contains_key(&steps) {
                val_cache.insert(steps, evaluate_level(model, &val_points, steps, None)?);
                work += (nv * steps) as u64;
            }
        }
        let fine_vals = &val_cache[&finest];
        let coarse_vals = &val_cache[&(finest / 2)];
        let approx = surrogate.eval_unit_many(&val_unit);
        let val_err = rms(fine_vals.iter().zip(&approx).map(|(a, b)| a - b));
        let bias = rms(fine_vals.iter().zip(coarse_vals).map(|(a, b)| a - b));
        let estimate = (val_err * val_err + bias * bias).sqrt();

        if estimate <= epsilon {
            let report = CostReport {
                mode: Some(FitMode::Adaptive),
                epsilon: Some(epsilon),
                wall_time_s: start.elapsed().as_secs_f64(),
                total_steps: work,
                pilot_steps: 0,
                levels: levels
                    .iter()
                    .map(|l| LevelSize { steps: l.steps, basis: l.set.len(), samples: l.weights.len() })
                    .collect(),
                iterations: iteration,
                estimated_error: Some(estimate),
            };
            return Ok((surrogate, report));
        }
        if iteration >= opts.max_iterations || work as f64 > opts.max_work {
            return Err(FitError::BudgetExceeded { needed: work as f64, cap: opts.max_work });
        }

        let terms: usize = levels.iter().map(|l| l.set.len()).sum();
        let budget = ((opts.growth * terms as f64).ceil() as usize).max(1);
        let added = select_indices(&levels, opts, budget)?;
        let new_level = levels.len() <= opts.max_level && bias * bias >= 0.1 * estimate * estimate;
        if added.iter().all(Vec::is_empty) && !new_level {
            return Err(FitError::BudgetExceeded { needed: work as f64, cap: opts.max_work });
        }
        for (l, new) in added.into_iter().enumerate() {
            if !new.is_empty() {
                levels[l].set.extend(new)?;
                levels[l].dirty = true;
            }
        }
        if new_level {
            let steps = 2 * levels.last().expect("levels").steps;
            levels.push(Level::new(steps, IndexSet::total_degree(dim, 0)));
        }
    }
}

fn rms(it: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = it.fold((0.0, 0usize), |(s, n), x| (s + x * x, n + 1));
    if n == 0 { 0.0 } else { (s / n as f64).sqrt() }
}

fn assemble(domain: &super::ParamBox, levels: &[Level]) -> Result<Surrogate, FitError> {
    let union = levels[0].set.clone();
    let mut coeffs = vec![0.0; union.len()];
    for level in levels {
        for (idx, c) in level.set.indices().iter().zip(&level.coeffs) {
            coeffs[union.position(idx).expect("nested level sets")] += c;
        }
    }
    Surrogate::new(domain.clone(), union, coeffs)
}

/// Picks up to `budget` indices by profit. Candidates are the reduced margin
/// and the margin one step beyond it; the latter enter together with their
/// missing parents, so a vanishing coefficient (an odd degree of a symmetric
/// response, say) does not block growth in that direction. Selection runs in
/// rounds against the same residuals, so one refit can grow a set by more
/// than its margin.
fn select_indices(levels: &[Level], opts: &FitOptions, budget: usize) -> Result<Vec<Vec<MultiIndex>>, FitError> {
    let mut sets: Vec<IndexSet> = levels.iter().map(|l| l.set.clone()).collect();
    let mut added = vec![Vec::new(); levels.len()];
    let mut cache: Vec<HashMap<MultiIndex, (f64, bool)>> = vec![HashMap::new(); levels.len()];
    let mut remaining = budget;
    let mut first = true;
    let mut relaxed = false;
    while remaining > 0 {
        let mut units: Vec<(f64, bool, usize, Vec<MultiIndex>)> = Vec::new();
        for (l, level) in levels.iter().enumerate() {
            let nested = |m: &MultiIndex| l == 0 || sets[l - 1].contains(m);
            let margin: Vec<MultiIndex> = sets[l].reduced_margin().into_iter().filter(|m| nested(m)).collect();
            let mut ahead_set = sets[l].clone();
            ahead_set.extend(margin.iter().cloned())?;
            let ahead: Vec<MultiIndex> = ahead_set.reduced_margin().into_iter().filter(|m| nested(m)).collect();
            let fresh: Vec<MultiIndex> =
                margin.iter().chain(&ahead).filter(|m| !cache[l].contains_key(*m)).cloned().collect();
            for s in score_candidates(l, level, fresh, opts) {
                cache[l].insert(s.index, (s.profit, s.significant));
            }
            let score = |m: &MultiIndex| cache[l].get(m).copied().unwrap_or((0.0, false));
            for m in margin {
                let (p, sig) = score(&m);
                units.push((p, sig, l, vec![m]));
            }
            for m in ahead {
                let mut unit: Vec<MultiIndex> = m.backward_neighbors().filter(|b| !sets[l].contains(b)).collect();
                let (p, sig) = score(&m);
                let total = p + unit.iter().map(|b| score(b).0).sum::<f64>();
                let size = unit.len() + 1;
                unit.push(m);
                units.push((total / size as f64, sig, l, unit));
            }
        }
        // Significant units go first. Once they run out the budget is filled
        // with units of positive estimated gain, and with nothing positive in
        // the first round by raw estimates, since a fixed set stalls the fit.
        if !relaxed && units.iter().any(|u| u.1) {
            units.retain(|u| u.1);
        } else if !first || units.iter().any(|u| u.0 > 0.0) {
            relaxed = true;
            units.retain(|u| u.0 > 0.0);
        }
        first = false;
        units.sort_by(|a, b| b.0.total_cmp(&a.0));
        let mut round: Vec<Vec<MultiIndex>> = vec![Vec::new(); levels.len()];
        let mut picked: Vec<HashSet<MultiIndex>> = vec![HashSet::new(); levels.len()];
        for (_, _, l, unit) in units {
            let new: Vec<MultiIndex> = unit.into_iter().filter(|m| !picked[l].contains(m)).collect();
            if new.is_empty() {
                continue;
            }
            if new.len() > remaining && remaining < budget {
                continue;
            }
            remaining = remaining.saturating_sub(new.len());
            for m in new {
                picked[l].insert(m.clone());
                round[l].push(m);
            }
        }
        if round.iter().all(Vec::is_empty) {
            if relaxed {
                break;
            }
            relaxed = true;
            continue;
        }
        for (l, new) in round.into_iter().enumerate() {
            if !new.is_empty() {
                sets[l].extend(new.iter().cloned())?;
                added[l].extend(new);
            }
        }
    }
    Ok(added)
}

/// z-score a projection estimate must exceed to count as signal.
const SIGNIFICANCE: f64 = 3.0;

/// Unbiased Monte Carlo estimates of the squared projection of a level's
/// residual onto each candidate basis function, per unit of work. Estimates
/// not significant against their sampling error are flagged.
fn score_candidates(l: usize, level: &Level, margin: Vec<MultiIndex>, opts: &FitOptions) -> Vec<Scored> {
    if margin.is_empty() || level.weights.len() < 2 {
        return Vec::new();
    }
    let dim = level.set.dim();
    let cand = IndexSet::from_indices_unchecked(dim, margin);
    let eval = BasisEvaluator::new(&cand);
    let mut scratch = eval.scratch();
    let mut row = vec![0.0; cand.len()];
    let mut sum = vec![0.0; cand.len()];
    let mut sum_sq = vec![0.0; cand.len()];
    for (i, (w, r)) in level.weights.iter().zip(&level.residuals).enumerate() {
        eval.eval_unit(&level.points[i * dim..(i + 1) * dim], &mut row, &mut scratch);
        let wr = w * r;
        for ((s, q), v) in sum.iter_mut().zip(sum_sq.iter_mut()).zip(&row) {
            let t = wr * v;
            *s += t;
            *q += t * t;
        }
    }
    let n = level.weights.len() as f64;
    let coarse = if l > 0 { level.steps / 2 } else { 0 };
    let m = level.set.len() as f64 + 1.0;
    let per_term = opts.sampling_factor * (1.0 + m.ln()) * (level.steps + coarse) as f64;
    let mut out = Vec::new();
    for ((idx, s), q) in cand.indices().iter().zip(sum).zip(sum_sq) {
        let mean = s / n;
        let var = (q / n - mean * mean).max(0.0) * n / (n - 1.0);
        out.push(Scored {
            profit: (mean * mean - var / n) / per_term,
            significant: mean * mean > SIGNIFICANCE * SIGNIFICANCE * var / n,
            index: idx.clone(),
        });
    }
    out
}
