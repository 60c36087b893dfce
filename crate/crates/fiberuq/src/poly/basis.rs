use serde::{Deserialize, Serialize};

use super::FitError;

/// Axis-aligned parameter box carrying the uniform probability measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamBox {
    pub lows: Vec<f64>,
    pub highs: Vec<f64>,
}

impl ParamBox {
    pub fn new(lows: Vec<f64>, highs: Vec<f64>) -> Result<Self, FitError> {
        if lows.is_empty() || lows.len() != highs.len() {
            return Err(FitError::Invalid("box bounds must be non-empty and of equal length".into()));
        }
        if lows.iter().zip(&highs).any(|(a, b)| !(a < b) || !a.is_finite() || !b.is_finite()) {
            return Err(FitError::Invalid("box requires finite lows < highs".into()));
        }
        Ok(Self { lows, highs })
    }

    pub fn unit(dim: usize) -> Self {
        Self { lows: vec![0.0; dim], highs: vec![1.0; dim] }
    }

    pub fn dim(&self) -> usize {
        self.lows.len()
    }

    pub fn contains(&self, omega: &[f64]) -> bool {
        omega.len() == self.dim()
            && omega.iter().zip(self.lows.iter().zip(&self.highs)).all(|(x, (a, b))| *a <= *x && *x <= *b)
    }

    pub fn to_unit_unchecked(&self, omega: &[f64], out: &mut [f64]) {
        for j in 0..self.dim() {
            out[j] = (omega[j] - self.lows[j]) / (self.highs[j] - self.lows[j]);
        }
    }

    pub fn to_unit(&self, omega: &[f64]) -> Result<Vec<f64>, FitError> {
        if !self.contains(omega) {
            return Err(FitError::OutsideBox(omega.to_vec()));
        }
        let mut u = vec![0.0; self.dim()];
        self.to_unit_unchecked(omega, &mut u);
        Ok(u)
    }

    pub fn from_unit(&self, u: &[f64], out: &mut [f64]) {
        for j in 0..self.dim() {
            out[j] = self.lows[j] + u[j] * (self.highs[j] - self.lows[j]);
        }
    }

    /// Sub-box over the given coordinates.
    pub fn select(&self, coords: &[usize]) -> Self {
        Self {
            lows: coords.iter().map(|&j| self.lows[j]).collect(),
            highs: coords.iter().map(|&j| self.highs[j]).collect(),
        }
    }
}

/// Orthonormal shifted Legendre values `p_0(u)..=p_m(u)` on `[0, 1]` into `out`.
pub fn legendre_table(u: f64, m: usize, out: &mut [f64]) {
    let x = 2.0 * u - 1.0;
    out[0] = 1.0;
    if m == 0 {
        return;
    }
    let (mut prev, mut cur) = (1.0, x);
    out[1] = 3f64.sqrt() * x;
    for k in 1..m {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0) * x * cur - kf * prev) / (kf + 1.0);
        prev = cur;
        cur = next;
        out[k + 1] = (2.0 * kf + 3.0).sqrt() * cur;
    }
}

/// Single orthonormal shifted Legendre value.
pub fn legendre(u: f64, k: usize) -> f64 {
    let x = 2.0 * u - 1.0;
    if k == 0 {
        return 1.0;
    }
    let (mut prev, mut cur) = (1.0, x);
    for j in 1..k {
        let jf = j as f64;
        let next = ((2.0 * jf + 1.0) * x * cur - jf * prev) / (jf + 1.0);
        prev = cur;
        cur = next;
    }
    (2.0 * k as f64 + 1.0).sqrt() * cur
}

/// Gauss-Legendre nodes and weights on `[0, 1]` (weights sum to one).
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 1..n {
                let kf = k as f64;
                let p2 = ((2.0 * kf + 1.0) * x * p1 - kf * p0) / (kf + 1.0);
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[n - 1 - i] = 0.5 * (x + 1.0);
        weights[n - 1 - i] = 1.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_matches_single() {
        let mut t = vec![0.0; 31];
        legendre_table(0.37, 30, &mut t);
        for k in 0..=30 {
            assert!((t[k] - legendre(0.37, k)).abs() < 1e-13);
        }
        assert!(legendre(0.5, 1).abs() < 1e-16);
        assert_eq!(legendre(0.2, 0), 1.0);
    }

    #[test]
    fn quadrature_weights_sum_to_one() {
        for n in [1, 2, 5, 40] {
            let (x, w) = gauss_legendre(n);
            assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-14);
            assert!(x.windows(2).all(|p| p[0] < p[1]));
        }
    }

    #[test]
    fn box_mapping() {
        let b = ParamBox::new(vec![550.0, 0.19], vec![580.0, 0.57]).unwrap();
        let u = b.to_unit(&[565.0, 0.38]).unwrap();
        assert!((u[0] - 0.5).abs() < 1e-15 && (u[1] - 0.5).abs() < 1e-15);
        assert!(b.to_unit(&[549.0, 0.3]).is_err());
        assert!(ParamBox::new(vec![1.0], vec![1.0]).is_err());
    }
}
