//! Surrogates over uncertainties and channel position: partial evaluation,
//! statistic fields and checks of the field error bounds.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::poly::{legendre_table, FitError, IndexSet, MultiIndex, ParamBox, Surrogate};
use crate::problem::FiberProblem;
use crate::stats::{
    empirical_cdf, empirical_quantile, qmc_values, rms_difference, sobol_unit_points, sorted, Bandwidth, BoundCheck,
    KdeDensity, StatsError,
};

pub const FIELD_SCHEMA: &str = "fiberuq.field/1";

#[derive(Debug, Error)]
pub enum ChannelError {
    #[error("partial evaluation needs interior points; got {0:?}")]
    BoundaryPoint(Vec<f64>),
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error(transparent)]
    Stats(#[from] StatsError),
}

/// Fixes the trailing coordinates of a surrogate.
#[derive(Debug, Clone)]
pub struct PartialEvaluator {
    reduced: IndexSet,
    free_box: ParamBox,
    fixed_box: ParamBox,
    target: Vec<usize>,
    fixed_degrees: Vec<u32>,
    max_fixed: Vec<usize>,
}

impl PartialEvaluator {
    pub fn new(set: &IndexSet, domain: &ParamBox, fixed: usize) -> Result<Self, ChannelError> {
        let dim = set.dim();
        if fixed == 0 || fixed >= dim {
            return Err(ChannelError::Invalid("must fix between 1 and dim - 1 coordinates".into()));
        }
        let free = dim - fixed;
        let mut lookup: HashMap<MultiIndex, usize> = HashMap::new();
        let mut order = Vec::new();
        let mut target = Vec::with_capacity(set.len());
        let mut fixed_degrees = Vec::with_capacity(set.len() * fixed);
        for idx in set.indices() {
            let mu = MultiIndex(idx.0[..free].to_vec());
            let next = order.len();
            let pos = *lookup.entry(mu.clone()).or_insert_with(|| {
                order.push(mu);
                next
            });
            target.push(pos);
            fixed_degrees.extend_from_slice(&idx.0[free..]);
        }
        let max_fixed = (0..fixed)
            .map(|j| set.indices().iter().map(|i| i.0[free + j] as usize).max().unwrap_or(0))
            .collect();
        let free_coords: Vec<usize> = (0..free).collect();
        let fixed_coords: Vec<usize> = (free..dim).collect();
        Ok(Self {
            reduced: IndexSet::from_indices(free, order)?,
            free_box: domain.select(&free_coords),
            fixed_box: domain.select(&fixed_coords),
            target,
            fixed_degrees,
            max_fixed,
        })
    }

    pub fn reduced_set(&self) -> &IndexSet {
        &self.reduced
    }

    /// Sizes of the groups of indices sharing each reduced index.
    pub fn group_sizes(&self) -> Vec<usize> {
        let mut n = vec![0; self.reduced.len()];
        for &t in &self.target {
            n[t] += 1;
        }
        n
    }

    pub fn group_of(&self, k: usize) -> usize {
        self.target[k]
    }

    /// Rescales a physical point of the fixed coordinates to the open unit cube.
    pub fn unit_point(&self, x: &[f64]) -> Result<Vec<f64>, ChannelError> {
        if x.len() != self.fixed_box.dim() {
            return Err(ChannelError::Invalid("wrong number of fixed coordinates".into()));
        }
        let mut u = vec![0.0; x.len()];
        self.fixed_box.to_unit_unchecked(x, &mut u);
        if u.iter().any(|&v| !(v > 0.0 && v < 1.0)) {
            return Err(ChannelError::BoundaryPoint(x.to_vec()));
        }
        Ok(u)
    }

    /// Reduced coefficients at a unit-cube point of the fixed coordinates.
    pub fn coeffs_unit(&self, coeffs: &[f64], u: &[f64]) -> Vec<f64> {
        let tables: Vec<Vec<f64>> = u
            .iter()
            .zip(&self.max_fixed)
            .map(|(&v, &m)| {
                let mut t = vec![0.0; m + 1];
                legendre_table(v, m, &mut t);
                t
            })
            .collect();
        let nf = u.len();
        let mut out = vec![0.0; self.reduced.len()];
        for (k, c) in coeffs.iter().enumerate() {
            let mut p = *c;
            for (j, t) in tables.iter().enumerate() {
                p *= t[self.fixed_degrees[k * nf + j] as usize];
            }
            out[self.target[k]] += p;
        }
        out
    }

    pub fn evaluate(&self, s: &Surrogate, x: &[f64]) -> Result<Surrogate, ChannelError> {
        let u = self.unit_point(x)?;
        let c = self.coeffs_unit(s.coeffs(), &u);
        Ok(Surrogate::new(self.free_box.clone(), self.reduced.clone(), c)?
            .with_fingerprint(format!("{}@{x:?}", s.fingerprint())))
    }
}

/// Surrogate over the leading coordinates with the trailing ones fixed at `x`.
pub fn partial_evaluate(s: &Surrogate, x: &[f64]) -> Result<Surrogate, ChannelError> {
    PartialEvaluator::new(s.index_set(), s.domain(), x.len())?.evaluate(s, x)
}

/// Cell-centred grid over the channel cross-section.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldGrid {
    pub nx: usize,
    pub ny: usize,
    pub width: f64,
    pub height: f64,
}

impl FieldGrid {
    pub fn new(nx: usize, ny: usize, width: f64, height: f64) -> Result<Self, ChannelError> {
        if nx < 2 || ny < 2 || !(width > 0.0) || !(height > 0.0) {
            return Err(ChannelError::Invalid("grid needs nx, ny >= 2 and a positive extent".into()));
        }
        Ok(Self { nx, ny, width, height })
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Point `k`, x-major order.
    pub fn point(&self, k: usize) -> [f64; 2] {
        let (i, j) = (k / self.ny, k % self.ny);
        [
            (i as f64 + 0.5) * self.width / self.nx as f64,
            (j as f64 + 0.5) * self.height / self.ny as f64,
        ]
    }

    pub fn points(&self) -> Vec<[f64; 2]> {
        (0..self.len()).map(|k| self.point(k)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldStatistics {
    pub schema: String,
    pub grid: FieldGrid,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    /// `P(a <= Q <= b)` per point, with the band `(a, b)`.
    pub band: Option<((f64, f64), Vec<f64>)>,
}

impl FieldStatistics {
    /// Grid point of the largest standard deviation.
    pub fn argmax_std(&self) -> [f64; 2] {
        let k = self.std.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).map_or(0, |(k, _)| k);
        self.grid.point(k)
    }

    pub fn mean_range(&self) -> (f64, f64) {
        let lo = self.mean.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = self.mean.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    }

    /// CSV `x,y,value` rows for one statistic.
    pub fn to_csv(&self, values: &[f64]) -> Result<String, ChannelError> {
        field_csv(&self.grid, values)
    }
}

pub fn field_csv(grid: &FieldGrid, values: &[f64]) -> Result<String, ChannelError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| ChannelError::Invalid(e.to_string());
    w.write_record(["x", "y", "value"]).map_err(err)?;
    for (k, v) in values.iter().enumerate() {
        let [x, y] = grid.point(k);
        w.write_record([x.to_string(), y.to_string(), v.to_string()]).map_err(err)?;
    }
    let bytes = w.into_inner().map_err(|e| ChannelError::Invalid(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| ChannelError::Invalid(e.to_string()))
}

/// Mean and standard deviation fields from reduced coefficients; the band
/// probability, when requested, from `n` Sobol points shared by all cells.
pub fn field_statistics(
    s: &Surrogate,
    grid: &FieldGrid,
    band: Option<(f64, f64, usize)>,
) -> Result<FieldStatistics, ChannelError> {
    let pe = PartialEvaluator::new(s.index_set(), s.domain(), 2)?;
    let zero = pe.reduced.position(&MultiIndex::zero(pe.reduced.dim())).expect("zero index");
    let coeffs: Vec<Vec<f64>> = grid
        .points()
        .par_iter()
        .map(|x| pe.unit_point(x).map(|u| pe.coeffs_unit(s.coeffs(), &u)))
        .collect::<Result<_, _>>()?;
    let mean = coeffs.iter().map(|c| c[zero]).collect();
    let std = coeffs
        .iter()
        .map(|c| c.iter().enumerate().filter(|(k, _)| *k != zero).map(|(_, v)| v * v).sum::<f64>().sqrt())
        .collect();
    let band = match band {
        None => None,
        Some((a, b, n)) => {
            let free = pe.reduced.dim();
            let pts = sobol_unit_points(free, n)?;
            let eval = crate::poly::eval::BasisEvaluator::new(&pe.reduced);
            let mut scratch = eval.scratch();
            let m = pe.reduced.len();
            let mut design = vec![0.0; n * m];
            for (row, u) in design.chunks_exact_mut(m).zip(pts.chunks_exact(free)) {
                eval.eval_unit(u, row, &mut scratch);
            }
            let probs = coeffs
                .par_iter()
                .map(|c| {
                    let inside = design
                        .chunks_exact(m)
                        .filter(|row| {
                            let v: f64 = row.iter().zip(c).map(|(p, q)| p * q).sum();
                            v >= a && v <= b
                        })
                        .count();
                    inside as f64 / n as f64
                })
                .collect();
            Some(((a, b), probs))
        }
    };
    Ok(FieldStatistics { schema: FIELD_SCHEMA.into(), grid: *grid, mean, std, band })
}

/// `C1 = (2/pi)^|I| prod 1/sqrt(u_i (1 - u_i))` on the unit cube.
pub fn bernstein_constant(u: &[f64]) -> f64 {
    u.iter().map(|&v| std::f64::consts::FRAC_2_PI / (v * (1.0 - v)).sqrt()).product()
}

/// `C2 = sum_mu sum_{lambda != nu in group mu} |c_lambda| |c_nu|`.
pub fn cross_term_constant(pe: &PartialEvaluator, coeffs: &[f64]) -> f64 {
    let mut abs_sum = vec![0.0; pe.reduced.len()];
    let mut sq_sum = vec![0.0; pe.reduced.len()];
    for (k, c) in coeffs.iter().enumerate() {
        abs_sum[pe.target[k]] += c.abs();
        sq_sum[pe.target[k]] += c * c;
    }
    abs_sum.iter().zip(&sq_sum).map(|(a, s)| a * a - s).sum()
}

/// Bound for a polynomial `f`: `C1 max_mu |Lambda(mu)| ||f||^2`.
pub fn polynomial_partial_bound(f: &Surrogate, x: &[f64]) -> Result<(f64, f64), ChannelError> {
    let pe = PartialEvaluator::new(f.index_set(), f.domain(), x.len())?;
    let u = pe.unit_point(x)?;
    let lhs: f64 = pe.coeffs_unit(f.coeffs(), &u).iter().map(|c| c * c).sum();
    let max_group = pe.group_sizes().into_iter().max().unwrap_or(0) as f64;
    Ok((lhs, bernstein_constant(&u) * max_group * f.norm_squared()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartialBoundReport {
    pub schema: String,
    pub grid: FieldGrid,
    /// `R(x, y)` per grid point.
    pub ratios: Vec<f64>,
    pub c2: f64,
    /// Estimated `||Q - Q_hat||^2` over the whole input box.
    pub global_error_sq: f64,
    /// Size of the index set carrying the coefficients behind `c2`.
    pub expansion_terms: usize,
    pub captured: f64,
    pub max_ratio: f64,
    pub violations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PartialBoundOptions {
    /// QMC points for each pointwise error.
    pub point_samples: usize,
    /// QMC points for the coefficients and the norm of `Q - Q_hat`.
    pub coefficient_samples: usize,
    /// Stop enlarging the index set once this fraction of `||Q - Q_hat||^2` is captured.
    pub capture: f64,
    pub max_terms: usize,
}

impl Default for PartialBoundOptions {
    fn default() -> Self {
        Self { point_samples: 100, coefficient_samples: 2_000_000, capture: 0.95, max_terms: 50_000 }
    }
}

/// Legendre expansion of `Q - Q_hat` on an enlargement of the surrogate's index set.
#[derive(Debug, Clone)]
pub struct ErrorExpansion {
    pub set: IndexSet,
    pub coeffs: Vec<f64>,
    /// QMC estimate of `||Q - Q_hat||^2`.
    pub norm_sq: f64,
    pub layers: usize,
}

impl ErrorExpansion {
    pub fn captured(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum::<f64>() / self.norm_sq
    }
}

fn projections(pts: &[f64], residuals: &[f64], new: &[MultiIndex], dim: usize) -> Vec<f64> {
    let maxd: Vec<usize> = (0..dim).map(|j| new.iter().map(|i| i.0[j] as usize).max().unwrap_or(0)).collect();
    let chunk = 8192;
    let partial: Vec<Vec<f64>> = pts
        .par_chunks(chunk * dim)
        .zip(residuals.par_chunks(chunk))
        .map(|(block, res)| {
            let mut acc = vec![0.0; new.len()];
            let mut tabs: Vec<Vec<f64>> = maxd.iter().map(|&m| vec![0.0; m + 1]).collect();
            for (u, r) in block.chunks_exact(dim).zip(res) {
                for (j, t) in tabs.iter_mut().enumerate() {
                    legendre_table(u[j], maxd[j], t);
                }
                for (a, idx) in acc.iter_mut().zip(new) {
                    let mut p = *r;
                    for (t, &d) in tabs.iter().zip(&idx.0) {
                        p *= t[d as usize];
                    }
                    *a += p;
                }
            }
            acc
        })
        .collect();
    let n = residuals.len() as f64;
    let mut total = vec![0.0; new.len()];
    for p in partial {
        for (t, v) in total.iter_mut().zip(p) {
            *t += v;
        }
    }
    total.into_iter().map(|v| v / n).collect()
}

/// Coefficients of `Q - Q_hat` by QMC, starting from the surrogate's index set and
/// adding reduced-margin layers until the captured fraction of the QMC norm
/// reaches `opts.capture` or the set would exceed `opts.max_terms`.
pub fn error_expansion(
    s: &Surrogate,
    problem: &FiberProblem,
    opts: &PartialBoundOptions,
) -> Result<ErrorExpansion, ChannelError> {
    let dim = s.dim();
    let n = opts.coefficient_samples;
    let pts = sobol_unit_points(dim, n)?;
    let residuals: Vec<f64> = pts
        .par_chunks(dim)
        .map(|u| -> Result<f64, ChannelError> {
            let mut w = vec![0.0; dim];
            s.domain().from_unit(u, &mut w);
            Ok(problem.exact_response(&w).map_err(StatsError::from)? - s.eval_unit(u))
        })
        .collect::<Result<_, _>>()?;
    let norm_sq = residuals.iter().map(|r| r * r).sum::<f64>() / n as f64;
    let mut set = s.index_set().clone();
    let mut coeffs = projections(&pts, &residuals, set.indices(), dim);
    let mut captured: f64 = coeffs.iter().map(|c| c * c).sum();
    let mut layers = 0;
    while captured < opts.capture * norm_sq {
        let margin = set.reduced_margin();
        if margin.is_empty() || set.len() + margin.len() > opts.max_terms {
            break;
        }
        let c = projections(&pts, &residuals, &margin, dim);
        captured += c.iter().map(|v| v * v).sum::<f64>();
        coeffs.extend(c);
        set.extend(margin)?;
        layers += 1;
    }
    Ok(ErrorExpansion { set, coeffs, norm_sq, layers })
}

/// Squared error `||Q - Q_hat||^2` by QMC over the surrogate's box.
pub fn global_error_sq(s: &Surrogate, problem: &FiberProblem, n: usize) -> Result<f64, ChannelError> {
    let exact = qmc_values(s.domain(), n, |w| problem.exact_response(w))?;
    let approx = crate::stats::qmc_surrogate_values(s, n)?;
    Ok(rms_difference(&exact, &approx).powi(2))
}

/// Ratios `R = (||f_x||^2 / (C1 (C2 + ||f||^2)))^(1/2)` for `f = Q - Q_hat`.
pub fn verify_partial_eval_bound(
    s: &Surrogate,
    problem: &FiberProblem,
    grid: &FieldGrid,
    opts: &PartialBoundOptions,
) -> Result<PartialBoundReport, ChannelError> {
    let expansion = error_expansion(s, problem, opts)?;
    let c2 = cross_term_constant(&PartialEvaluator::new(&expansion.set, s.domain(), 2)?, &expansion.coeffs);
    let global = expansion.norm_sq;
    let pe = PartialEvaluator::new(s.index_set(), s.domain(), 2)?;
    let free = pe.reduced.dim();
    let omega_pts = sobol_unit_points(free, opts.point_samples)?;
    let ratios: Vec<f64> = grid
        .points()
        .par_iter()
        .map(|x| -> Result<f64, ChannelError> {
            let u = pe.unit_point(x)?;
            let reduced = Surrogate::new(pe.free_box.clone(), pe.reduced.clone(), pe.coeffs_unit(s.coeffs(), &u))?;
            let mut w = vec![0.0; free + 2];
            let mut sum = 0.0;
            for v in omega_pts.chunks_exact(free) {
                pe.free_box.from_unit(v, &mut w[..free]);
                w[free..].copy_from_slice(x);
                let q = problem.exact_response(&w).map_err(StatsError::from)?;
                sum += (q - reduced.eval_unit(v)).powi(2);
            }
            let num = sum / opts.point_samples as f64;
            Ok((num / (bernstein_constant(&u) * (c2 + global))).sqrt())
        })
        .collect::<Result<_, _>>()?;
    let max_ratio = ratios.iter().copied().fold(0.0, f64::max);
    let violations = ratios.iter().filter(|&&r| !(r < 1.0)).count();
    Ok(PartialBoundReport {
        schema: FIELD_SCHEMA.into(),
        grid: *grid,
        ratios,
        c2,
        global_error_sq: global,
        expansion_terms: expansion.set.len(),
        captured: expansion.captured(),
        max_ratio,
        violations,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GlobalBoundOptions {
    pub grid_n: usize,
    /// QMC points per grid point.
    pub point_samples: usize,
    /// Thresholds `z` for the CDF fields are `k / cdf_levels`.
    pub cdf_levels: usize,
    pub p: f64,
    /// Floor for the density lower bound on the quantile intervals.
    pub density_floor: f64,
    /// Points for the global error and the global density estimate.
    pub global_samples: usize,
}

impl Default for GlobalBoundOptions {
    fn default() -> Self {
        Self { grid_n: 20, point_samples: 1000, cdf_levels: 40, p: 0.99, density_floor: 1e-3, global_samples: 10_000 }
    }
}

/// Field errors in the mean-square sense over the channel, each against its bound.
pub fn verify_global_stat_bounds(
    s: &Surrogate,
    problem: &FiberProblem,
    opts: &GlobalBoundOptions,
) -> Result<Vec<BoundCheck>, ChannelError> {
    let cfg = problem.config();
    let grid = FieldGrid::new(opts.grid_n, opts.grid_n, cfg.channel.width, cfg.channel.height)?;
    let pe = PartialEvaluator::new(s.index_set(), s.domain(), 2)?;
    let free = pe.reduced.dim();
    let omega_pts = sobol_unit_points(free, opts.point_samples)?;
    let zs: Vec<f64> = (1..opts.cdf_levels).map(|k| k as f64 / opts.cdf_levels as f64).collect();

    struct Cell {
        mean: (f64, f64),
        std: (f64, f64),
        cdf: Vec<(f64, f64)>,
        quantile: (f64, f64),
        density_low: f64,
    }
    let cells: Vec<Cell> = grid
        .points()
        .par_iter()
        .map(|x| -> Result<Cell, ChannelError> {
            let u = pe.unit_point(x)?;
            let reduced = Surrogate::new(pe.free_box.clone(), pe.reduced.clone(), pe.coeffs_unit(s.coeffs(), &u))?;
            let mut w = vec![0.0; free + 2];
            let mut exact = Vec::with_capacity(opts.point_samples);
            let mut approx = Vec::with_capacity(opts.point_samples);
            for v in omega_pts.chunks_exact(free) {
                pe.free_box.from_unit(v, &mut w[..free]);
                w[free..].copy_from_slice(x);
                exact.push(problem.exact_response(&w).map_err(StatsError::from)?);
                approx.push(reduced.eval_unit(v));
            }
            let n = exact.len() as f64;
            let m = exact.iter().sum::<f64>() / n;
            let sd = (exact.iter().map(|q| (q - m).powi(2)).sum::<f64>() / n).sqrt();
            let exact = sorted(exact);
            let approx = sorted(approx);
            let q = empirical_quantile(&exact, opts.p)?;
            let qh = empirical_quantile(&approx, opts.p)?;
            let density_low = match KdeDensity::new(exact.clone(), Bandwidth::Silverman) {
                Ok(k) => k.min_density_over(q.min(qh), q.max(qh), 64),
                Err(_) => 0.0,
            };
            Ok(Cell {
                mean: (m, reduced.mean()),
                std: (sd, reduced.variance().sqrt()),
                cdf: zs.iter().map(|&z| (empirical_cdf(&exact, z), empirical_cdf(&approx, z))).collect(),
                quantile: (q, qh),
                density_low,
            })
        })
        .collect::<Result<_, _>>()?;

    let exact_global = qmc_values(s.domain(), opts.global_samples, |w| problem.exact_response(w))?;
    let approx_global = crate::stats::qmc_surrogate_values(s, opts.global_samples)?;
    let l2 = rms_difference(&exact_global, &approx_global);
    let fsup = KdeDensity::new(exact_global, Bandwidth::Silverman)?.sup_density();
    let c = cells.iter().map(|c| c.density_low).fold(f64::INFINITY, f64::min).max(opts.density_floor);

    let field_rms = |f: &dyn Fn(&Cell) -> (f64, f64)| {
        (cells.iter().map(|c| f(c)).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / cells.len() as f64).sqrt()
    };
    let mean_err = field_rms(&|c| c.mean);
    let std_err = field_rms(&|c| c.std);
    let cdf_err = (0..zs.len()).map(|k| field_rms(&|c| c.cdf[k])).fold(0.0, f64::max);
    let q_err = field_rms(&|c| c.quantile);
    let growth = (fsup * l2).powf(2.0 / 3.0);
    let check = |name: &str, err: f64, bound: f64| {
        let mut b = BoundCheck::new(name, err, 0.0, bound);
        b.abs_error = err;
        b
    };
    Ok(vec![
        check("mean_field", mean_err, l2),
        check("std_field", std_err, l2),
        check("cdf_field_sup_sq", cdf_err * cdf_err, 27.0 * growth),
        check("quantile_field", q_err, 3.0 / c * growth),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> Surrogate {
        let set = IndexSet::total_degree(4, 3);
        let coeffs = (0..set.len()).map(|k| ((k * 13 % 7) as f64 - 3.0) / (k as f64 + 1.0)).collect();
        Surrogate::new(ParamBox::new(vec![550.0, 0.19, 0.0, 0.0], vec![580.0, 0.57, 5.0, 2.0]).unwrap(), set, coeffs)
            .unwrap()
    }

    #[test]
    fn partial_evaluation_identity() {
        let s = toy();
        let r = partial_evaluate(&s, &[1.3, 0.7]).unwrap();
        for w in [[551.0, 0.2], [570.0, 0.5], [565.0, 0.38]] {
            let full = s.eval(&[w[0], w[1], 1.3, 0.7]).unwrap();
            assert!((r.eval(&w).unwrap() - full).abs() < 1e-12);
        }
        assert!(partial_evaluate(&s, &[0.0, 0.7]).is_err());
    }

    #[test]
    fn cell_centred_grid() {
        let g = FieldGrid::new(4, 2, 5.0, 2.0).unwrap();
        assert_eq!(g.point(0), [0.625, 0.5]);
        assert_eq!(g.point(7), [4.375, 1.5]);
    }

    #[test]
    fn cross_terms_of_single_group() {
        let set = IndexSet::tensor_product(2, 1);
        let pe = PartialEvaluator::new(&set, &ParamBox::unit(2), 1).unwrap();
        let c = [1.0, -2.0, 3.0, 0.5];
        let mut want = 0.0;
        for a in 0..4 {
            for b in 0..4 {
                if a != b && pe.group_of(a) == pe.group_of(b) {
                    want += f64::abs(c[a]) * f64::abs(c[b]);
                }
            }
        }
        assert!((cross_term_constant(&pe, &c) - want).abs() < 1e-14);
    }
}
