use fiberuq::channel::partial_evaluate;
use fiberuq::ode::SolverError;
use fiberuq::poly::{
    fit_to_tolerance, legendre, optimal_sample, weighted_lsq, FitMode, FitOptions, IndexSet, MultiIndex, ParamBox,
    ResponseModel, Surrogate,
};
use fiberuq::stats::sobol_unit_points;
use nalgebra::{DMatrix, SymmetricEigen};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Gauss-Legendre rule on [0, 1] from the eigen-decomposition of the Jacobi matrix.
fn golub_welsch(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut j = DMatrix::<f64>::zeros(n, n);
    for k in 1..n {
        let b = k as f64 / ((4 * k * k - 1) as f64).sqrt();
        j[(k, k - 1)] = b;
        j[(k - 1, k)] = b;
    }
    let eig = SymmetricEigen::new(j);
    let mut rule: Vec<(f64, f64)> = (0..n)
        .map(|i| (0.5 * (eig.eigenvalues[i] + 1.0), eig.eigenvectors[(0, i)].powi(2)))
        .collect();
    rule.sort_by(|a, b| a.0.total_cmp(&b.0));
    rule.into_iter().unzip()
}

fn random_surrogate(set: IndexSet, domain: ParamBox, seed: u64) -> Surrogate {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coeffs = set
        .indices()
        .iter()
        .map(|i| rng.gen_range(-1.0..1.0) / (1.0 + i.total_degree() as f64).powi(2))
        .collect();
    Surrogate::new(domain, set, coeffs).unwrap()
}

#[test]
fn gram_matrix_is_identity() {
    let set = IndexSet::total_degree(2, 12);
    let (nodes, weights) = golub_welsch(14);
    let m = set.len();
    let mut gram = vec![0.0; m * m];
    for (a, wa) in nodes.iter().zip(&weights) {
        for (b, wb) in nodes.iter().zip(&weights) {
            let row: Vec<f64> = set
                .indices()
                .iter()
                .map(|i| legendre(*a, i.0[0] as usize) * legendre(*b, i.0[1] as usize))
                .collect();
            for p in 0..m {
                for q in 0..m {
                    gram[p * m + q] += wa * wb * row[p] * row[q];
                }
            }
        }
    }
    for p in 0..m {
        for q in 0..m {
            let expect = if p == q { 1.0 } else { 0.0 };
            assert!((gram[p * m + q] - expect).abs() < 1e-12, "G[{p},{q}] = {}", gram[p * m + q]);
        }
    }
}

#[test]
fn parseval_matches_qmc_norm() {
    let domain = ParamBox::new(vec![550.0, 0.19, 0.0], vec![580.0, 0.57, 5.0]).unwrap();
    let s = random_surrogate(IndexSet::total_degree(3, 5), domain, 7);
    let n = 1 << 16;
    let pts = sobol_unit_points(3, n).unwrap();
    let qmc = pts.chunks(3).map(|u| s.eval_unit(u).powi(2)).sum::<f64>() / n as f64;
    let rel = (qmc - s.norm_squared()).abs() / s.norm_squared();
    assert!(rel < 1e-3, "relative difference {rel:e}");
    assert!((s.mean() - s.coeffs()[s.index_set().position(&MultiIndex::zero(3)).unwrap()]).abs() < 1e-15);
}

#[test]
fn least_squares_recovers_polynomial() {
    let domain = ParamBox::new(vec![-1.0, 2.0], vec![1.0, 5.0]).unwrap();
    let set = IndexSet::total_degree(2, 6);
    let truth = random_surrogate(set.clone(), domain.clone(), 3);
    let mut batch = optimal_sample(&set, &domain, 200, 11);
    batch.values = Some((0..batch.len()).map(|i| truth.eval(batch.point(i)).unwrap()).collect());
    let sol = weighted_lsq(&batch, &set, &domain).unwrap();
    assert!(sol.gram_condition < 10.0);
    assert!(sol.residual < 1e-24);
    for (a, b) in sol.coeffs.iter().zip(truth.coeffs()) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn difference_and_json_round_trip() {
    let domain = ParamBox::unit(3);
    let a = random_surrogate(IndexSet::total_degree(3, 4), domain.clone(), 1);
    let b = random_surrogate(IndexSet::tensor_product(3, 2), domain, 2);
    let d = a.sub(&b).unwrap();
    for u in sobol_unit_points(3, 64).unwrap().chunks(3) {
        assert!((d.eval_unit(u) - (a.eval_unit(u) - b.eval_unit(u))).abs() < 1e-13);
    }
    let back = Surrogate::from_json(&d.to_json().unwrap()).unwrap();
    assert_eq!(back, d);
}

#[test]
fn index_set_shapes() {
    assert_eq!(IndexSet::total_degree(4, 6).len(), 210);
    assert_eq!(IndexSet::tensor_product(3, 4).len(), 125);
    let mut set = IndexSet::total_degree(3, 2);
    assert!(set.is_subset_of(&IndexSet::tensor_product(3, 2)));
    for _ in 0..3 {
        let margin = set.reduced_margin();
        assert!(!margin.is_empty());
        set.extend(margin).unwrap();
        assert!(set.is_downward_closed());
    }
    assert_eq!(set.len(), IndexSet::total_degree(3, 5).len());
    assert!(IndexSet::from_indices(2, vec![MultiIndex(vec![0, 0]), MultiIndex(vec![0, 2])]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn partial_evaluation_identity(seed in any::<u64>(), t in 0.0..1.0f64, l in 0.0..1.0f64,
                                   x in 0.01..0.99f64, y in 0.01..0.99f64) {
        let domain = ParamBox::new(vec![550.0, 0.19, 0.0, 0.0], vec![580.0, 0.57, 5.0, 2.0]).unwrap();
        let s = random_surrogate(IndexSet::total_degree(4, 7), domain, seed);
        let xy = [5.0 * x, 2.0 * y];
        let reduced = partial_evaluate(&s, &xy).unwrap();
        let omega = [550.0 + 30.0 * t, 0.19 + 0.38 * l];
        let full = s.eval(&[omega[0], omega[1], xy[0], xy[1]]).unwrap();
        prop_assert!((reduced.eval(&omega).unwrap() - full).abs() < 1e-12);
    }
}

/// `Q_n(w) = exp(w0) sin(2 w1) + g(w) / n`.
struct Toy {
    domain: ParamBox,
    smooth_correction: bool,
}

impl Toy {
    fn exact(w: &[f64]) -> f64 {
        w[0].exp() * (2.0 * w[1]).sin()
    }
}

impl ResponseModel for Toy {
    fn domain(&self) -> &ParamBox {
        &self.domain
    }

    fn response(&self, w: &[f64], steps: usize) -> Result<f64, SolverError> {
        let g = if self.smooth_correction { (w[0] * w[1]).exp() / (1.0 + w[0]) } else { 1.0 + w[0] * w[1] };
        Ok(Self::exact(w) + g / steps as f64)
    }
}

fn toy_error(s: &Surrogate) -> f64 {
    let n = 1 << 14;
    let pts = sobol_unit_points(2, n).unwrap();
    (pts.chunks(2).map(|u| (Toy::exact(u) - s.eval_unit(u)).powi(2)).sum::<f64>() / n as f64).sqrt()
}

#[test]
fn multilevel_fit_reaches_tolerance() {
    let eps = 1e-3;
    let cases = [(FitMode::APriori, true), (FitMode::Adaptive, true), (FitMode::Adaptive, false)];
    for (mode, smooth_correction) in cases {
        let toy = Toy { domain: ParamBox::unit(2), smooth_correction };
        let (s, cost) = fit_to_tolerance(eps, &toy, mode, &FitOptions::default(), 5).unwrap();
        let err = toy_error(&s);
        assert!(err <= eps, "{mode:?}: error {err:e}");
        assert!(cost.total_steps > 0 && cost.levels.len() >= 2);
    }
}
