use super::basis::legendre_table;
use super::index::IndexSet;

/// Evaluates all basis functions of an index set at a point of the unit cube.
#[derive(Debug, Clone)]
pub struct BasisEvaluator {
    dim: usize,
    flat: Vec<u32>,
    max_deg: Vec<usize>,
    offsets: Vec<usize>,
}

impl BasisEvaluator {
    pub fn new(set: &IndexSet) -> Self {
        let dim = set.dim();
        let max_deg: Vec<usize> = set.max_degrees().into_iter().map(|m| m as usize).collect();
        let mut offsets = Vec::with_capacity(dim);
        let mut acc = 0;
        for m in &max_deg {
            offsets.push(acc);
            acc += m + 1;
        }
        let flat = set.indices().iter().flat_map(|i| i.0.iter().copied()).collect();
        Self { dim, flat, max_deg, offsets }
    }

    pub fn len(&self) -> usize {
        self.flat.len() / self.dim.max(1)
    }

    pub fn is_empty(&self) -> bool {
        self.flat.is_empty()
    }

    pub fn scratch(&self) -> Vec<f64> {
        vec![0.0; self.offsets.last().map_or(0, |o| o + self.max_deg[self.dim - 1] + 1)]
    }

    fn fill_tables(&self, u: &[f64], scratch: &mut [f64]) {
        for j in 0..self.dim {
            let o = self.offsets[j];
            legendre_table(u[j], self.max_deg[j], &mut scratch[o..o + self.max_deg[j] + 1]);
        }
    }

    /// Writes `P_lambda(u)` for every index into `out`.
    pub fn eval_unit(&self, u: &[f64], out: &mut [f64], scratch: &mut [f64]) {
        self.fill_tables(u, scratch);
        for (r, idx) in out.iter_mut().zip(self.flat.chunks_exact(self.dim)) {
            let mut p = 1.0;
            for j in 0..self.dim {
                p *= scratch[self.offsets[j] + idx[j] as usize];
            }
            *r = p;
        }
    }

    /// `sum_lambda c_lambda P_lambda(u)`
    pub fn dot_unit(&self, u: &[f64], coeffs: &[f64], scratch: &mut [f64]) -> f64 {
        self.fill_tables(u, scratch);
        let mut s = 0.0;
        for (c, idx) in coeffs.iter().zip(self.flat.chunks_exact(self.dim)) {
            let mut p = *c;
            for j in 0..self.dim {
                p *= scratch[self.offsets[j] + idx[j] as usize];
            }
            s += p;
        }
        s
    }
}
