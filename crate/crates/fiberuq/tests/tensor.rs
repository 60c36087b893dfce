use fiberuq::tensor::{expm, kron, mat_of_vec, sym_eigenvalues, vec_identity, vec_of_mat, Mat3, Mat9};
use proptest::prelude::*;

fn mat3() -> impl Strategy<Value = Mat3> {
    prop::array::uniform9(-2.0f64..2.0).prop_map(|a| Mat3::from_column_slice(&a))
}

fn mat9(scale: f64) -> impl Strategy<Value = Mat9> {
    prop::collection::vec(-scale..scale, 81).prop_map(|v| Mat9::from_column_slice(&v))
}

/// Taylor series with scaling and squaring, summed until terms vanish.
fn taylor_expm(m: &Mat9) -> Mat9 {
    let norm = m.iter().map(|x| x.abs()).sum::<f64>();
    let s = (norm.max(1.0).log2().ceil() as i32 + 4).max(0);
    let a = m / 2f64.powi(s);
    let mut term = Mat9::identity();
    let mut sum = Mat9::identity();
    for k in 1..40 {
        term = term * a / k as f64;
        sum += term;
    }
    for _ in 0..s {
        sum = sum * sum;
    }
    sum
}

fn rel(a: &Mat9, b: &Mat9) -> f64 {
    (a - b).norm() / b.norm()
}

proptest! {
    #[test]
    fn vec_round_trip(m in mat3()) {
        prop_assert_eq!(mat_of_vec(&vec_of_mat(&m)), m);
    }

    #[test]
    fn kronecker_vec_identity(a in mat3(), b in mat3(), x in mat3()) {
        let lhs = kron(&a, &b) * vec_of_mat(&x);
        let rhs = vec_of_mat(&(b * x * a.transpose()));
        prop_assert!((lhs - rhs).amax() < 1e-12);
    }

    #[test]
    fn kronecker_mixed_product(a in mat3(), b in mat3(), c in mat3(), d in mat3()) {
        let lhs = kron(&a, &b) * kron(&c, &d);
        let rhs = kron(&(a * c), &(b * d));
        prop_assert!((lhs - rhs).amax() < 1e-12);
    }

    #[test]
    fn trace_through_identity_vector(x in mat3()) {
        prop_assert!((vec_identity().dot(&vec_of_mat(&x)) - x.trace()).abs() < 1e-12);
    }

    #[test]
    fn expm_matches_taylor(m in mat9(0.5), t in 0.1f64..4.0) {
        let e = expm(&m, t).unwrap();
        prop_assert!(rel(&e, &taylor_expm(&(m * t))) < 1e-11);
    }

    #[test]
    fn expm_semigroup(m in mat9(0.3), s in 0.0f64..3.0, t in 0.0f64..3.0) {
        let lhs = expm(&m, s + t).unwrap();
        let rhs = expm(&m, s).unwrap() * expm(&m, t).unwrap();
        prop_assert!(rel(&rhs, &lhs) < 1e-11);
    }

    #[test]
    fn expm_inverse(m in mat9(0.5), t in 0.0f64..2.0) {
        let p = expm(&m, t).unwrap() * expm(&m, -t).unwrap();
        prop_assert!((p - Mat9::identity()).amax() < 1e-11);
    }

    #[test]
    fn symmetric_eigenvalues(m in mat3()) {
        let s = (m + m.transpose()) * 0.5;
        let ours = sym_eigenvalues(&s).unwrap();
        let mut reference: Vec<f64> = s.symmetric_eigen().eigenvalues.iter().copied().collect();
        reference.sort_by(|a, b| b.total_cmp(a));
        for (a, b) in ours.iter().zip(&reference) {
            prop_assert!((a - b).abs() < 1e-10);
        }
        prop_assert!(ours[0] >= ours[1] && ours[1] >= ours[2]);
    }
}

#[test]
fn expm_of_diagonal_and_nilpotent() {
    let d = Mat9::from_diagonal(&nalgebra::SVector::<f64, 9>::from_fn(|i, _| i as f64 - 4.0));
    let e = expm(&d, 0.7).unwrap();
    for i in 0..9 {
        assert!((e[(i, i)] - (0.7 * (i as f64 - 4.0)).exp()).abs() < 1e-13 * e[(i, i)].max(1.0));
    }
    let mut n = Mat9::zeros();
    n[(0, 1)] = 3.0;
    let e = expm(&n, 2.0).unwrap();
    assert!((e[(0, 1)] - 6.0).abs() < 1e-14);
    assert!((e - Mat9::identity()).iter().filter(|x| x.abs() > 0.0).count() == 1);
}

#[test]
fn expm_large_norm_scales() {
    let mut m = Mat9::zeros();
    m[(0, 1)] = 1.0;
    m[(1, 0)] = -1.0;
    let e = expm(&m, 100.0).unwrap();
    assert!((e[(0, 0)] - 100f64.cos()).abs() < 1e-12);
    assert!((e[(0, 1)] - 100f64.sin()).abs() < 1e-12);
}

#[test]
fn expm_rejects_non_finite() {
    let mut m = Mat9::zeros();
    m[(2, 2)] = f64::NAN;
    assert!(expm(&m, 1.0).is_err());
    assert!(expm(&Mat9::zeros(), f64::INFINITY).is_err());
}
