use faer::linalg::matmul::triangular::{self, BlockStructure};
use faer::{Accum, Mat, MatRef, Par, Side};

use super::basis::ParamBox;
use super::eval::BasisEvaluator;
use super::index::IndexSet;
use super::sampling::SampleBatch;
use super::FitError;

/// Fits are rejected above this Gram-matrix condition number.
pub const MAX_GRAM_CONDITION: f64 = 1e8;

#[derive(Debug, Clone, PartialEq)]
pub struct LsqSolution {
    pub coeffs: Vec<f64>,
    /// Estimated condition number of the weighted Gram matrix.
    pub gram_condition: f64,
    /// Weighted mean squared residual.
    pub residual: f64,
}

/// Weighted discrete least squares on the orthonormal basis of `set`.
///
/// The weighted Gram matrix of the augmented design `[A | y]` is accumulated
/// block by block (lower triangle only) and the normal equations are solved
/// by Cholesky. Optimal sampling keeps the Gram matrix close to the identity,
/// and fits are rejected when its estimated condition number is large.
pub fn weighted_lsq(batch: &SampleBatch, set: &IndexSet, domain: &ParamBox) -> Result<LsqSolution, FitError> {
    let values = batch.values.as_ref().ok_or(FitError::MissingValues)?;
    let n = set.len();
    let rows = batch.len();
    if rows < n {
        return Err(FitError::NotEnoughSamples { samples: rows, basis: n });
    }
    if values.len() != rows || batch.dim != set.dim() || domain.dim() != set.dim() {
        return Err(FitError::Invalid("sample batch does not match the index set".into()));
    }
    let eval = BasisEvaluator::new(set);
    let mut scratch = eval.scratch();
    let mut row = vec![0.0; n];
    let mut u = vec![0.0; set.dim()];
    let chunk = 1024.min(rows);
    let mut gram = Mat::<f64>::zeros(n + 1, n + 1);
    let mut block = Mat::<f64>::zeros(chunk, n + 1);
    let mut start = 0;
    while start < rows {
        let end = (start + chunk).min(rows);
        for i in start..end {
            domain.to_unit_unchecked(batch.point(i), &mut u);
            eval.eval_unit(&u, &mut row, &mut scratch);
            let sw = batch.weights[i].sqrt();
            for (k, p) in row.iter().enumerate() {
                block[(i - start, k)] = sw * p;
            }
            block[(i - start, n)] = sw * values[i];
        }
        let b = block.as_ref().submatrix(0, 0, end - start, n + 1);
        triangular::matmul(
            gram.as_mut(),
            BlockStructure::TriangularLower,
            Accum::Add,
            b.transpose(),
            BlockStructure::Rectangular,
            b,
            BlockStructure::Rectangular,
            1.0 / rows as f64,
            Par::Seq,
        );
        start = end;
    }
    let g = gram.as_ref().submatrix(0, 0, n, n);
    let llt = g
        .llt(Side::Lower)
        .map_err(|_| FitError::IllConditioned { condition: f64::INFINITY })?;
    let r = llt.L().transpose();
    let cond = triangular_condition(r);
    let gram_condition = cond * cond;
    if !(gram_condition <= MAX_GRAM_CONDITION) {
        return Err(FitError::IllConditioned { condition: gram_condition });
    }
    let mut x = Mat::<f64>::from_fn(n, 1, |k, _| gram[(n, k)]);
    llt.L().solve_lower_triangular_in_place(x.as_mut());
    let explained: f64 = (0..n).map(|k| x[(k, 0)] * x[(k, 0)]).sum();
    let residual = (gram[(n, n)] - explained).max(0.0);
    r.solve_upper_triangular_in_place(x.as_mut());
    Ok(LsqSolution { coeffs: (0..n).map(|k| x[(k, 0)]).collect(), gram_condition, residual })
}

fn normalize(v: &mut Mat<f64>) -> f64 {
    let s = v.norm_l2();
    if s > 0.0 {
        for k in 0..v.nrows() {
            v[(k, 0)] /= s;
        }
    }
    s
}

/// Ratio of extreme singular values of an upper-triangular matrix by power
/// and inverse iteration.
fn triangular_condition(r: MatRef<'_, f64>) -> f64 {
    let n = r.nrows();
    let start = || Mat::<f64>::from_fn(n, 1, |i, _| 1.0 + (i as f64 * 0.618034).fract());
    let mut v = start();
    normalize(&mut v);
    let mut smax2 = 0.0;
    for _ in 0..40 {
        let w = r.transpose() * (r * &v);
        let s = w.norm_l2();
        v = w;
        normalize(&mut v);
        if (s - smax2).abs() <= 1e-6 * s {
            smax2 = s;
            break;
        }
        smax2 = s;
    }
    let mut v = start();
    normalize(&mut v);
    let mut inv2 = 0.0;
    for _ in 0..40 {
        r.transpose().solve_lower_triangular_in_place(v.as_mut());
        r.solve_upper_triangular_in_place(v.as_mut());
        let s = normalize(&mut v);
        if !s.is_finite() {
            return f64::INFINITY;
        }
        if (s - inv2).abs() <= 1e-6 * s {
            inv2 = s;
            break;
        }
        inv2 = s;
    }
    (smax2 * inv2).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::sampling::optimal_sample;

    #[test]
    fn condition_of_diagonal() {
        let r = Mat::<f64>::from_fn(4, 4, |i, j| if i == j { [1.0, 2.0, 0.5, 4.0][i] } else { 0.0 });
        assert!((triangular_condition(r.as_ref()) - 8.0).abs() < 1e-6);
    }

    #[test]
    fn recovers_polynomial_across_chunks() {
        let set = IndexSet::tensor_product(2, 4);
        let domain = ParamBox::unit(2);
        let mut batch = optimal_sample(&set, &domain, 3000, 1);
        let eval = BasisEvaluator::new(&set);
        let mut scratch = eval.scratch();
        let truth: Vec<f64> = (0..set.len()).map(|k| ((k * 7) % 5) as f64 - 2.0).collect();
        let vals = (0..batch.len()).map(|i| eval.dot_unit(batch.point(i), &truth, &mut scratch)).collect();
        batch.values = Some(vals);
        let sol = weighted_lsq(&batch, &set, &domain).unwrap();
        for (a, b) in sol.coeffs.iter().zip(&truth) {
            assert!((a - b).abs() < 1e-10);
        }
        assert!(sol.residual < 1e-20);
    }

    #[test]
    fn duplicate_points_are_ill_conditioned() {
        let set = IndexSet::tensor_product(1, 3);
        let batch = SampleBatch { dim: 1, points: vec![0.3; 10], weights: vec![1.0; 10], values: Some(vec![1.0; 10]) };
        assert!(matches!(weighted_lsq(&batch, &set, &ParamBox::unit(1)), Err(FitError::IllConditioned { .. })));
    }
}
