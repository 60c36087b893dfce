//! Small dense linear algebra: 3x3 and 9x9 matrices, column-major
//! vectorization, Kronecker products, the matrix exponential and closed-form
//! symmetric eigenvalues.

use nalgebra::{SMatrix, SVector};
use thiserror::Error;

pub type Mat3 = SMatrix<f64, 3, 3>;
pub type Mat9 = SMatrix<f64, 9, 9>;
pub type Vec9 = SVector<f64, 9>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TensorError {
    #[error("matrix contains non-finite entries")]
    NonFinite,
    #[error("matrix exponential scaling exponent {0} exceeds the cap of {MAX_SQUARINGS}")]
    ScalingOverflow(i32),
    #[error("singular Pade denominator")]
    SingularPade,
    #[error("matrix is not symmetric (asymmetry {0:e})")]
    NotSymmetric(f64),
}

/// Upper limit on the number of squarings in [`expm`].
pub const MAX_SQUARINGS: i32 = 60;

/// Column-major stacking of a 3x3 matrix.
pub fn vec_of_mat(m: &Mat3) -> Vec9 {
    Vec9::from_column_slice(m.as_slice())
}

pub fn mat_of_vec(v: &Vec9) -> Mat3 {
    Mat3::from_column_slice(v.as_slice())
}

/// `e = e1 + e5 + e9`, the vectorized identity.
pub fn vec_identity() -> Vec9 {
    vec_of_mat(&Mat3::identity())
}

/// Kronecker product with `(a ⊗ b) vec(x) = vec(b x aᵀ)`.
pub fn kron(a: &Mat3, b: &Mat3) -> Mat9 {
    Mat9::from_fn(|r, c| a[(r / 3, c / 3)] * b[(r % 3, c % 3)])
}

pub fn is_finite<const R: usize, const C: usize>(m: &SMatrix<f64, R, C>) -> bool {
    m.iter().all(|x| x.is_finite())
}

const THETA: [(usize, f64); 4] = [
    (3, 1.495585217958292e-2),
    (5, 2.539398330063230e-1),
    (7, 9.504178996162932e-1),
    (9, 2.097847961257068e0),
];
const THETA_13: f64 = 5.371920351148152;

const B3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const B5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const B7: [f64; 8] = [
    17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0,
];
const B9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const B13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

fn one_norm<const N: usize>(a: &SMatrix<f64, N, N>) -> f64 {
    (0..N)
        .map(|j| a.column(j).iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Odd/even split of a low-order Pade numerator: returns (U, V).
fn pade_low<const N: usize>(
    a: &SMatrix<f64, N, N>,
    a2: &SMatrix<f64, N, N>,
    b: &[f64],
) -> (SMatrix<f64, N, N>, SMatrix<f64, N, N>) {
    let id = SMatrix::<f64, N, N>::identity();
    let mut pow = id;
    let mut u = id * b[1];
    let mut v = id * b[0];
    let mut k = 2;
    while k < b.len() {
        pow *= a2;
        v += pow * b[k];
        if k + 1 < b.len() {
            u += pow * b[k + 1];
        }
        k += 2;
    }
    (a * u, v)
}

fn pade13<const N: usize>(a: &SMatrix<f64, N, N>) -> (SMatrix<f64, N, N>, SMatrix<f64, N, N>) {
    let b = &B13;
    let id = SMatrix::<f64, N, N>::identity();
    let a2 = a * a;
    let a4 = a2 * a2;
    let a6 = a4 * a2;
    let u_inner = a6 * (a6 * b[13] + a4 * b[11] + a2 * b[9]) + a6 * b[7] + a4 * b[5] + a2 * b[3]
        + id * b[1];
    let u = a * u_inner;
    let v = a6 * (a6 * b[12] + a4 * b[10] + a2 * b[8]) + a6 * b[6] + a4 * b[4] + a2 * b[2]
        + id * b[0];
    (u, v)
}

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
fn solve_dense<const N: usize>(
    mut a: SMatrix<f64, N, N>,
    mut b: SMatrix<f64, N, N>,
) -> Result<SMatrix<f64, N, N>, TensorError> {
    for k in 0..N {
        let p = (k..N).max_by(|&i, &j| a[(i, k)].abs().total_cmp(&a[(j, k)].abs())).unwrap_or(k);
        if a[(p, k)] == 0.0 {
            return Err(TensorError::SingularPade);
        }
        a.swap_rows(k, p);
        b.swap_rows(k, p);
        for i in k + 1..N {
            let f = a[(i, k)] / a[(k, k)];
            if f != 0.0 {
                for j in k..N {
                    a[(i, j)] -= f * a[(k, j)];
                }
                for j in 0..N {
                    b[(i, j)] -= f * b[(k, j)];
                }
            }
        }
    }
    for k in (0..N).rev() {
        for j in 0..N {
            let mut s = b[(k, j)];
            for i in k + 1..N {
                s -= a[(k, i)] * b[(i, j)];
            }
            b[(k, j)] = s / a[(k, k)];
        }
    }
    Ok(b)
}

/// Matrix exponential `exp(t m)` by Pade scaling and squaring.
pub fn expm<const N: usize>(m: &SMatrix<f64, N, N>, t: f64) -> Result<SMatrix<f64, N, N>, TensorError> {
    if !t.is_finite() || !is_finite(m) {
        return Err(TensorError::NonFinite);
    }
    let a = m * t;
    let norm = one_norm(&a);
    let id = SMatrix::<f64, N, N>::identity();
    if norm == 0.0 {
        return Ok(id);
    }
    let solve = |u: SMatrix<f64, N, N>, v: SMatrix<f64, N, N>| solve_dense(v - u, v + u);
    let a2 = a * a;
    for (order, theta) in THETA {
        if norm <= theta {
            let (u, v) = match order {
                3 => pade_low(&a, &a2, &B3),
                5 => pade_low(&a, &a2, &B5),
                7 => pade_low(&a, &a2, &B7),
                _ => pade_low(&a, &a2, &B9),
            };
            return solve(u, v);
        }
    }
    let s = (norm / THETA_13).log2().ceil().max(0.0) as i32;
    if s > MAX_SQUARINGS {
        return Err(TensorError::ScalingOverflow(s));
    }
    let scaled = a / 2f64.powi(s);
    let (u, v) = pade13(&scaled);
    let mut r = solve(u, v)?;
    for _ in 0..s {
        r = r * r;
    }
    if !is_finite(&r) {
        return Err(TensorError::NonFinite);
    }
    Ok(r)
}

/// Eigenvalues of the symmetric part of `a`, sorted descending.
///
/// Uses the trigonometric closed form and falls back to cyclic Jacobi sweeps
/// when the characteristic-polynomial residual is poor.
pub fn sym_eigenvalues(a: &Mat3) -> Result<[f64; 3], TensorError> {
    if !is_finite(a) {
        return Err(TensorError::NonFinite);
    }
    let s = (a + a.transpose()) * 0.5;
    let mut ev = trig_eigenvalues(&s);
    let scale = s.iter().map(|x| x.abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let ok = ev.iter().all(|&l| {
        let r = (s - Mat3::identity() * l).determinant().abs();
        r <= 1e-11 * scale.powi(3) + 1e-300
    });
    if !ok {
        ev = jacobi_eigenvalues(&s);
    }
    ev.sort_by(|x, y| y.total_cmp(x));
    Ok(ev)
}

fn trig_eigenvalues(s: &Mat3) -> [f64; 3] {
    let p1 = s[(0, 1)].powi(2) + s[(0, 2)].powi(2) + s[(1, 2)].powi(2);
    let q = s.trace() / 3.0;
    if p1 == 0.0 {
        return [s[(0, 0)], s[(1, 1)], s[(2, 2)]];
    }
    let p2 = (s[(0, 0)] - q).powi(2) + (s[(1, 1)] - q).powi(2) + (s[(2, 2)] - q).powi(2) + 2.0 * p1;
    let p = (p2 / 6.0).sqrt();
    let b = (s - Mat3::identity() * q) / p;
    let r = (b.determinant() / 2.0).clamp(-1.0, 1.0);
    let phi = r.acos() / 3.0;
    let e1 = q + 2.0 * p * phi.cos();
    let e3 = q + 2.0 * p * (phi + 2.0 * std::f64::consts::FRAC_PI_3).cos();
    [e1, 3.0 * q - e1 - e3, e3]
}

fn jacobi_eigenvalues(s: &Mat3) -> [f64; 3] {
    let mut m = *s;
    for _ in 0..50 {
        let off = m[(0, 1)].powi(2) + m[(0, 2)].powi(2) + m[(1, 2)].powi(2);
        if off <= 1e-32 * (m.norm_squared() + f64::MIN_POSITIVE) {
            break;
        }
        for (p, q) in [(0, 1), (0, 2), (1, 2)] {
            let apq = m[(p, q)];
            if apq == 0.0 {
                continue;
            }
            let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
            let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
            let t = if theta == 0.0 { 1.0 } else { t };
            let c = 1.0 / (t * t + 1.0).sqrt();
            let sn = t * c;
            let mut g = Mat3::identity();
            g[(p, p)] = c;
            g[(q, q)] = c;
            g[(p, q)] = sn;
            g[(q, p)] = -sn;
            m = g.transpose() * m * g;
        }
    }
    [m[(0, 0)], m[(1, 1)], m[(2, 2)]]
}
