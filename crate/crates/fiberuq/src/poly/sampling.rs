use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::basis::{gauss_legendre, legendre, ParamBox};
use super::eval::BasisEvaluator;
use super::index::IndexSet;

/// Degrees up to this value are sampled by tabulated inverse CDF.
pub const MAX_TABULATED_DEGREE: usize = 60;
const TABLE_CELLS: usize = 1024;

/// Weighted sample; `points` is row-major `n x dim` in box coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleBatch {
    pub dim: usize,
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
    pub values: Option<Vec<f64>>,
}

impl SampleBatch {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }
}

struct CdfTable {
    degree: usize,
    cdf: Vec<f64>,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    total: f64,
}

impl CdfTable {
    fn build(degree: usize) -> Self {
        let (nodes, weights) = gauss_legendre(degree + 1);
        let mut t = Self { degree, cdf: vec![0.0; TABLE_CELLS + 1], nodes, weights, total: 1.0 };
        for i in 0..TABLE_CELLS {
            let a = i as f64 / TABLE_CELLS as f64;
            let b = (i + 1) as f64 / TABLE_CELLS as f64;
            t.cdf[i + 1] = t.cdf[i] + t.integral(a, b);
        }
        let total = t.cdf[TABLE_CELLS];
        for c in &mut t.cdf {
            *c /= total;
        }
        t.total = total;
        t
    }

    /// Exact integral of `p_k^2` over `[a, b]`.
    fn integral(&self, a: f64, b: f64) -> f64 {
        let h = b - a;
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * legendre(a + h * x, self.degree).powi(2))
            .sum::<f64>()
            * h
    }

    fn invert(&self, r: f64) -> f64 {
        let i = match self.cdf.binary_search_by(|c| c.total_cmp(&r)) {
            Ok(i) => return i as f64 / TABLE_CELLS as f64,
            Err(i) => i.clamp(1, TABLE_CELLS) - 1,
        };
        let start = i as f64 / TABLE_CELLS as f64;
        let (mut lo, mut hi) = (start, (i + 1) as f64 / TABLE_CELLS as f64);
        let base = self.cdf[i];
        let target = (r - base) * self.total;
        let span = (self.cdf[i + 1] - base) * self.total;
        let mut u = if span > 0.0 { lo + (hi - lo) * target / span } else { 0.5 * (lo + hi) };
        for _ in 0..60 {
            let f = self.integral(start, u) - target;
            if f > 0.0 {
                hi = u;
            } else {
                lo = u;
            }
            let dens = legendre(u, self.degree).powi(2);
            let mut next = if dens > 0.0 { u - f / dens } else { f64::NAN };
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - u).abs() < 1e-15 || hi - lo < 1e-15 {
                return next;
            }
            u = next;
        }
        u
    }
}

fn table(degree: usize) -> &'static CdfTable {
    static TABLES: OnceLock<Vec<OnceLock<CdfTable>>> = OnceLock::new();
    let all = TABLES.get_or_init(|| (0..=MAX_TABULATED_DEGREE).map(|_| OnceLock::new()).collect());
    all[degree].get_or_init(|| CdfTable::build(degree))
}

/// Draws from the density `p_k(u)^2` on `[0, 1]`.
pub fn sample_legendre_squared<R: Rng + ?Sized>(k: usize, rng: &mut R) -> f64 {
    if k == 0 {
        return rng.r#gen::<f64>();
    }
    if k <= MAX_TABULATED_DEGREE {
        return table(k).invert(rng.r#gen::<f64>());
    }
    // p_k^2 <= (2 + 1/k) / (pi sqrt(u (1 - u))), so arcsine proposals accept with rate about 1/2
    let bound = 2.0 + 1.0 / k as f64;
    loop {
        let s = (std::f64::consts::FRAC_PI_2 * rng.r#gen::<f64>()).sin();
        let u = s * s;
        let accept = legendre(u, k).powi(2) * std::f64::consts::PI * (u * (1.0 - u)).sqrt() / bound;
        if rng.r#gen::<f64>() < accept {
            return u;
        }
    }
}

/// Number of samples used to fit on an index set of size `m`.
pub fn sample_count(m: usize, factor: f64) -> usize {
    let mf = m as f64;
    ((factor * mf * mf.ln().max(1.0)).ceil() as usize).max(m)
}

/// Samples from `(1/|L|) sum_l P_l^2 dmu` with weights `|L| / sum_l P_l^2`.
pub fn optimal_sample(set: &IndexSet, domain: &ParamBox, n: usize, seed: u64) -> SampleBatch {
    let dim = set.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let eval = BasisEvaluator::new(set);
    let mut scratch = eval.scratch();
    let mut points = vec![0.0; n * dim];
    let mut weights = vec![0.0; n];
    let mut u = vec![0.0; dim];
    let mut row = vec![0.0; set.len()];
    for i in 0..n {
        let lambda = &set.indices()[rng.gen_range(0..set.len())];
        for j in 0..dim {
            u[j] = sample_legendre_squared(lambda.0[j] as usize, &mut rng);
        }
        eval.eval_unit(&u, &mut row, &mut scratch);
        let s: f64 = row.iter().map(|p| p * p).sum();
        weights[i] = set.len() as f64 / s;
        domain.from_unit(&u, &mut points[i * dim..(i + 1) * dim]);
    }
    SampleBatch { dim, points, weights, values: None }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_cdf_matches_table() {
        let t = table(7);
        for r in [0.001, 0.2, 0.5, 0.77, 0.999] {
            let u = t.invert(r);
            let f = t.integral(0.0, u) / t.integral(0.0, 1.0);
            assert!((f - r).abs() < 1e-12, "{r} {f}");
        }
    }

    #[test]
    fn constant_basis_gives_unit_weights() {
        let set = IndexSet::tensor_product(2, 0);
        let b = optimal_sample(&set, &ParamBox::unit(2), 50, 3);
        assert!(b.weights.iter().all(|w| (*w - 1.0).abs() < 1e-15));
    }

    #[test]
    fn weights_bounded_by_set_size() {
        let set = IndexSet::tensor_product(2, 3);
        let b = optimal_sample(&set, &ParamBox::unit(2), 500, 4);
        assert!(b.weights.iter().all(|w| *w > 0.0 && *w <= set.len() as f64 + 1e-12));
    }

    #[test]
    fn rejection_sampler_moments() {
        // second moment of p_k^2 about 1/2 tends to 1/8 for large k (arcsine limit)
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 20000;
        let m: f64 = (0..n).map(|_| (sample_legendre_squared(80, &mut rng) - 0.5).powi(2)).sum::<f64>() / n as f64;
        assert!((m - 0.125).abs() < 0.005, "{m}");
    }
}
