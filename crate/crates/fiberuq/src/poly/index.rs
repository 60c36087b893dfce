use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::FitError;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiIndex(pub Vec<u32>);

impl MultiIndex {
    pub fn zero(dim: usize) -> Self {
        Self(vec![0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&k| k == 0)
    }

    /// Indices obtained by lowering one nonzero entry by one.
    pub fn backward_neighbors(&self) -> impl Iterator<Item = MultiIndex> + '_ {
        (0..self.dim()).filter(|&j| self.0[j] > 0).map(|j| {
            let mut v = self.0.clone();
            v[j] -= 1;
            MultiIndex(v)
        })
    }

    pub fn forward_neighbors(&self) -> impl Iterator<Item = MultiIndex> + '_ {
        (0..self.dim()).map(|j| {
            let mut v = self.0.clone();
            v[j] += 1;
            MultiIndex(v)
        })
    }

    pub fn total_degree(&self) -> u32 {
        self.0.iter().sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type", content = "degree")]
pub enum IndexSetKind {
    TensorProduct(u32),
    TotalDegree(u32),
    Adaptive,
}

/// Downward-closed set of multi-indices with stable ordering.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexSet {
    dim: usize,
    indices: Vec<MultiIndex>,
    lookup: HashMap<MultiIndex, usize>,
    kind: IndexSetKind,
}

impl IndexSet {
    pub fn tensor_product(dim: usize, m: u32) -> Self {
        Self::tensor_product_aniso(&vec![m; dim], IndexSetKind::TensorProduct(m))
    }

    fn tensor_product_aniso(degrees: &[u32], kind: IndexSetKind) -> Self {
        let dim = degrees.len();
        let mut indices = vec![MultiIndex::zero(dim)];
        for j in 0..dim {
            let mut next = Vec::with_capacity(indices.len() * (degrees[j] as usize + 1));
            for idx in &indices {
                for k in 0..=degrees[j] {
                    let mut v = idx.0.clone();
                    v[j] = k;
                    next.push(MultiIndex(v));
                }
            }
            indices = next;
        }
        indices.sort();
        Self::build(dim, indices, kind)
    }

    pub fn total_degree(dim: usize, m: u32) -> Self {
        let tp = Self::tensor_product(dim, m);
        let indices = tp.indices.into_iter().filter(|i| i.total_degree() <= m).collect();
        Self::build(dim, indices, IndexSetKind::TotalDegree(m))
    }

    /// Validates downward closedness.
    pub fn from_indices(dim: usize, indices: Vec<MultiIndex>) -> Result<Self, FitError> {
        if indices.iter().any(|i| i.dim() != dim) {
            return Err(FitError::Invalid("multi-index dimension mismatch".into()));
        }
        let set = Self::build(dim, indices, IndexSetKind::Adaptive);
        if set.lookup.len() != set.indices.len() {
            return Err(FitError::Invalid("duplicate multi-indices".into()));
        }
        if !set.is_downward_closed() {
            return Err(FitError::Invalid("index set is not downward closed".into()));
        }
        Ok(set)
    }

    /// Arbitrary collection of indices, used only for basis evaluation.
    pub(crate) fn from_indices_unchecked(dim: usize, indices: Vec<MultiIndex>) -> Self {
        Self::build(dim, indices, IndexSetKind::Adaptive)
    }

    pub(crate) fn with_kind(mut self, kind: IndexSetKind) -> Self {
        self.kind = kind;
        self
    }

    fn build(dim: usize, indices: Vec<MultiIndex>, kind: IndexSetKind) -> Self {
        let lookup = indices.iter().enumerate().map(|(i, m)| (m.clone(), i)).collect();
        Self { dim, indices, lookup, kind }
    }

    pub fn is_downward_closed(&self) -> bool {
        self.indices.iter().all(|i| i.backward_neighbors().all(|b| self.lookup.contains_key(&b)))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn kind(&self) -> IndexSetKind {
        self.kind
    }

    pub fn indices(&self) -> &[MultiIndex] {
        &self.indices
    }

    pub fn position(&self, idx: &MultiIndex) -> Option<usize> {
        self.lookup.get(idx).copied()
    }

    pub fn contains(&self, idx: &MultiIndex) -> bool {
        self.lookup.contains_key(idx)
    }

    /// Largest degree per coordinate.
    pub fn max_degrees(&self) -> Vec<u32> {
        let mut m = vec![0; self.dim];
        for idx in &self.indices {
            for (a, b) in m.iter_mut().zip(&idx.0) {
                *a = (*a).max(*b);
            }
        }
        m
    }

    /// Indices outside the set whose backward neighbors all lie inside.
    pub fn reduced_margin(&self) -> Vec<MultiIndex> {
        let mut out: Vec<MultiIndex> = Vec::new();
        let mut seen = std::collections::HashSet::new();
        for idx in &self.indices {
            for f in idx.forward_neighbors() {
                if !self.contains(&f) && f.backward_neighbors().all(|b| self.contains(&b)) && seen.insert(f.clone()) {
                    out.push(f);
                }
            }
        }
        out.sort();
        out
    }

    /// Adds indices, keeping the existing order; the result must stay downward closed.
    pub fn extend(&mut self, new: impl IntoIterator<Item = MultiIndex>) -> Result<(), FitError> {
        for idx in new {
            if idx.dim() != self.dim {
                return Err(FitError::Invalid("multi-index dimension mismatch".into()));
            }
            if !self.lookup.contains_key(&idx) {
                self.lookup.insert(idx.clone(), self.indices.len());
                self.indices.push(idx);
            }
        }
        self.kind = IndexSetKind::Adaptive;
        if !self.is_downward_closed() {
            return Err(FitError::Invalid("index set is not downward closed".into()));
        }
        Ok(())
    }

    pub fn is_subset_of(&self, other: &IndexSet) -> bool {
        self.indices.iter().all(|i| other.contains(i))
    }
}
