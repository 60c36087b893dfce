use fiberuq::stats::{empirical_cdf, empirical_quantile, ks_distance, sobol_unit_points, sorted, Bandwidth, KdeDensity};
use proptest::prelude::*;

#[test]
fn sobol_leading_points() {
    let expect = [
        [0.5, 0.5, 0.5, 0.5],
        [0.75, 0.25, 0.25, 0.25],
        [0.25, 0.75, 0.75, 0.75],
        [0.375, 0.375, 0.625, 0.875],
        [0.875, 0.875, 0.125, 0.375],
        [0.625, 0.125, 0.875, 0.625],
        [0.125, 0.625, 0.375, 0.125],
        [0.1875, 0.3125, 0.9375, 0.4375],
    ];
    let pts = sobol_unit_points(4, expect.len()).unwrap();
    for (row, e) in pts.chunks(4).zip(&expect) {
        assert_eq!(row, e);
    }
}

#[test]
fn sobol_is_stratified() {
    let n = 1 << 10;
    let pts = sobol_unit_points(6, n).unwrap();
    for j in 0..6 {
        let mut bins = [0usize; 32];
        for row in pts.chunks(6) {
            bins[(row[j] * 32.0) as usize] += 1;
        }
        let total: usize = bins.iter().sum();
        assert_eq!(total, n);
        assert!(bins.iter().all(|&b| (31..=33).contains(&b)), "dim {j}: {bins:?}");
    }
}

#[test]
fn kde_integrates_to_one() {
    let xs: Vec<f64> = sobol_unit_points(1, 2000).unwrap().iter().map(|u| u * u).collect();
    let kde = KdeDensity::new(xs, Bandwidth::Silverman).unwrap();
    let h = kde.bandwidth();
    let (a, b) = (-10.0 * h, 1.0 + 10.0 * h);
    let (grid, ys) = kde.grid(a, b, 20_001);
    let dx = grid[1] - grid[0];
    let integral = dx * (ys.iter().sum::<f64>() - 0.5 * (ys[0] + ys[ys.len() - 1]));
    assert!((integral - 1.0).abs() < 1e-4, "integral {integral}");
    assert!(kde.sup_density() >= ys.iter().copied().fold(0.0, f64::max) - 1e-9);
}

#[test]
fn silverman_bandwidth_of_spread_sample() {
    let xs: Vec<f64> = (0..1000).map(|k| k as f64 / 999.0).collect();
    let kde = KdeDensity::new(xs.clone(), Bandwidth::Silverman).unwrap();
    let mean = 0.5;
    let sigma = (xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / 999.0).sqrt();
    let iqr = 0.5;
    let expect = 0.9 * sigma.min(iqr / 1.34) * 1000f64.powf(-0.2);
    assert!((kde.bandwidth() - expect).abs() < 2e-3 * expect);
}

fn brute_ks(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .chain(b)
        .map(|&t| (empirical_cdf(a, t) - empirical_cdf(b, t)).abs())
        .fold(0.0, f64::max)
}

proptest! {
    #[test]
    fn ks_matches_brute_force(a in prop::collection::vec(0u8..20, 1..40), b in prop::collection::vec(0u8..20, 1..40)) {
        let a = sorted(a.into_iter().map(f64::from).collect());
        let b = sorted(b.into_iter().map(f64::from).collect());
        prop_assert!((ks_distance(&a, &b) - brute_ks(&a, &b)).abs() < 1e-15);
        prop_assert_eq!(ks_distance(&a, &a), 0.0);
    }

    #[test]
    fn quantile_is_lower_inverse_of_cdf(v in prop::collection::vec(-5.0..5.0f64, 1..60), p in 0.001..0.999f64) {
        let s = sorted(v);
        let q = empirical_quantile(&s, p).unwrap();
        prop_assert!(empirical_cdf(&s, q) >= p);
        let below = s.iter().copied().filter(|&x| x < q).fold(f64::NEG_INFINITY, f64::max);
        if below.is_finite() {
            prop_assert!(empirical_cdf(&s, below) < p);
        }
    }
}

#[test]
fn quantile_rejects_bad_probability() {
    assert!(empirical_quantile(&[1.0, 2.0], 1.0).is_err());
    assert!(empirical_quantile(&[], 0.5).is_err());
}
