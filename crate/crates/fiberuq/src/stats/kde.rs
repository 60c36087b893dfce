use serde::{Deserialize, Serialize};

use super::StatsError;

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
/// Kernel contributions beyond this many bandwidths are dropped.
const CUTOFF: f64 = 9.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bandwidth {
    /// `0.9 min(sigma, IQR / 1.34) n^(-1/5)`
    Silverman,
    Fixed(f64),
}

/// Gaussian kernel density estimate.
#[derive(Debug, Clone)]
pub struct KdeDensity {
    sorted: Vec<f64>,
    bandwidth: f64,
}

impl KdeDensity {
    pub fn new(mut samples: Vec<f64>, rule: Bandwidth) -> Result<Self, StatsError> {
        if samples.len() < 2 {
            return Err(StatsError::Degenerate("a density estimate needs at least two samples".into()));
        }
        if samples.iter().any(|x| !x.is_finite()) {
            return Err(StatsError::Invalid("non-finite sample".into()));
        }
        samples.sort_by(f64::total_cmp);
        let bandwidth = match rule {
            Bandwidth::Fixed(h) if h > 0.0 => h,
            Bandwidth::Fixed(_) => return Err(StatsError::Invalid("bandwidth must be positive".into())),
            Bandwidth::Silverman => silverman(&samples)?,
        };
        Ok(Self { sorted: samples, bandwidth })
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn samples(&self) -> &[f64] {
        &self.sorted
    }

    pub fn support(&self) -> (f64, f64) {
        (self.sorted[0], self.sorted[self.sorted.len() - 1])
    }

    pub fn density(&self, x: f64) -> f64 {
        let h = self.bandwidth;
        let lo = self.sorted.partition_point(|&s| s < x - CUTOFF * h);
        let hi = self.sorted.partition_point(|&s| s <= x + CUTOFF * h);
        let sum: f64 = self.sorted[lo..hi].iter().map(|s| (-0.5 * ((x - s) / h).powi(2)).exp()).sum();
        sum * INV_SQRT_2PI / (h * self.sorted.len() as f64)
    }

    /// Density on `m` equispaced points of `[a, b]`, from linearly binned counts.
    pub fn grid(&self, a: f64, b: f64, m: usize) -> (Vec<f64>, Vec<f64>) {
        let m = m.max(2);
        let dx = (b - a) / (m - 1) as f64;
        let xs: Vec<f64> = (0..m).map(|i| a + i as f64 * dx).collect();
        if dx <= 0.0 {
            return (xs, vec![self.density(a); m]);
        }
        let mut counts = vec![0.0; m];
        let mut outside = Vec::new();
        for &s in &self.sorted {
            let t = (s - a) / dx;
            if t < 0.0 || t > (m - 1) as f64 {
                outside.push(s);
                continue;
            }
            let i = (t.floor() as usize).min(m - 2);
            let f = t - i as f64;
            counts[i] += 1.0 - f;
            counts[i + 1] += f;
        }
        let h = self.bandwidth;
        let reach = (CUTOFF * h / dx).ceil() as usize;
        let kernel: Vec<f64> = (0..=reach).map(|k| (-0.5 * (k as f64 * dx / h).powi(2)).exp()).collect();
        let norm = INV_SQRT_2PI / (h * self.sorted.len() as f64);
        let ys = (0..m)
            .map(|i| {
                let lo = i.saturating_sub(reach);
                let hi = (i + reach).min(m - 1);
                let mut acc: f64 = (lo..=hi).map(|j| counts[j] * kernel[i.abs_diff(j)]).sum();
                acc += outside.iter().map(|s| (-0.5 * ((xs[i] - s) / h).powi(2)).exp()).sum::<f64>();
                acc * norm
            })
            .collect();
        (xs, ys)
    }

    /// Supremum of the density, located on a binned grid and refined exactly.
    pub fn sup_density(&self) -> f64 {
        let (lo, hi) = self.support();
        let (a, b) = (lo - 3.0 * self.bandwidth, hi + 3.0 * self.bandwidth);
        let m = 4096;
        let (xs, ys) = self.grid(a, b, m);
        let imax = ys.iter().enumerate().max_by(|x, y| x.1.total_cmp(y.1)).map_or(0, |(i, _)| i);
        let dx = (b - a) / (m - 1) as f64;
        let mut best = self.density(xs[imax]);
        for k in -8..=8 {
            best = best.max(self.density(xs[imax] + f64::from(k) * dx / 4.0));
        }
        best
    }

    /// Smallest density over `[a, b]`, sampled at `m` points.
    pub fn min_density_over(&self, a: f64, b: f64, m: usize) -> f64 {
        if b <= a {
            return self.density(a);
        }
        let (_, ys) = self.grid(a, b, m);
        ys.into_iter().fold(f64::INFINITY, f64::min)
    }
}

fn silverman(sorted: &[f64]) -> Result<f64, StatsError> {
    let n = sorted.len() as f64;
    let mean = sorted.iter().sum::<f64>() / n;
    let sigma = (sorted.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let q = |p: f64| {
        let pos = p * (n - 1.0);
        let i = pos.floor() as usize;
        let f = pos - i as f64;
        sorted[i] + f * (sorted[(i + 1).min(sorted.len() - 1)] - sorted[i])
    };
    let iqr = q(0.75) - q(0.25);
    let spread = if iqr > 0.0 { sigma.min(iqr / 1.34) } else { sigma };
    if !(spread > 0.0) {
        return Err(StatsError::Degenerate("all samples are equal".into()));
    }
    Ok(0.9 * spread * n.powf(-0.2))
}
