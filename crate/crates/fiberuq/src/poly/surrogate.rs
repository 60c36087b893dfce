use serde::{Deserialize, Serialize};

use super::basis::ParamBox;
use super::eval::BasisEvaluator;
use super::index::{IndexSet, IndexSetKind, MultiIndex};
use super::FitError;

pub const SURROGATE_SCHEMA: &str = "fiberuq.surrogate/1";
pub const BASIS_TAG: &str = "legendre-orthonormal-uniform";

/// Polynomial surrogate in the orthonormal shifted Legendre basis of a box.
#[derive(Debug, Clone)]
pub struct Surrogate {
    domain: ParamBox,
    index_set: IndexSet,
    coeffs: Vec<f64>,
    fingerprint: String,
    evaluator: BasisEvaluator,
}

impl PartialEq for Surrogate {
    fn eq(&self, other: &Self) -> bool {
        self.domain == other.domain
            && self.index_set.indices() == other.index_set.indices()
            && self.coeffs == other.coeffs
            && self.fingerprint == other.fingerprint
    }
}

#[derive(Serialize, Deserialize)]
struct SurrogateFile {
    schema: String,
    basis: String,
    fingerprint: String,
    lows: Vec<f64>,
    highs: Vec<f64>,
    kind: IndexSetKind,
    indices: Vec<MultiIndex>,
    coeffs: Vec<f64>,
}

impl Surrogate {
    pub fn new(domain: ParamBox, index_set: IndexSet, coeffs: Vec<f64>) -> Result<Self, FitError> {
        if coeffs.len() != index_set.len() || domain.dim() != index_set.dim() {
            return Err(FitError::Invalid("coefficient count or dimension mismatch".into()));
        }
        let evaluator = BasisEvaluator::new(&index_set);
        Ok(Self { domain, index_set, coeffs, fingerprint: String::new(), evaluator })
    }

    pub fn constant(domain: ParamBox, value: f64) -> Self {
        let set = IndexSet::tensor_product(domain.dim(), 0);
        Self::new(domain, set, vec![value]).expect("consistent constant surrogate")
    }

    pub fn with_fingerprint(mut self, fingerprint: impl Into<String>) -> Self {
        self.fingerprint = fingerprint.into();
        self
    }

    pub fn domain(&self) -> &ParamBox {
        &self.domain
    }

    pub fn index_set(&self) -> &IndexSet {
        &self.index_set
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn coeff(&self, idx: &MultiIndex) -> f64 {
        self.index_set.position(idx).map_or(0.0, |p| self.coeffs[p])
    }

    /// Evaluation inside the box.
    pub fn eval(&self, omega: &[f64]) -> Result<f64, FitError> {
        let u = self.domain.to_unit(omega)?;
        Ok(self.eval_unit(&u))
    }

    /// Evaluation that also accepts points outside the box.
    pub fn eval_extrapolate(&self, omega: &[f64]) -> f64 {
        let mut u = vec![0.0; self.dim()];
        self.domain.to_unit_unchecked(omega, &mut u);
        self.eval_unit(&u)
    }

    pub fn eval_unit(&self, u: &[f64]) -> f64 {
        let mut scratch = self.evaluator.scratch();
        self.evaluator.dot_unit(u, &self.coeffs, &mut scratch)
    }

    /// Evaluates at many unit-cube points (row-major) reusing one scratch buffer.
    pub fn eval_unit_many(&self, points: &[f64]) -> Vec<f64> {
        let mut scratch = self.evaluator.scratch();
        points
            .chunks_exact(self.dim())
            .map(|u| self.evaluator.dot_unit(u, &self.coeffs, &mut scratch))
            .collect()
    }

    /// Mean under the uniform measure: the constant coefficient.
    pub fn mean(&self) -> f64 {
        self.coeff(&MultiIndex::zero(self.dim()))
    }

    /// Variance: sum of squared non-constant coefficients.
    pub fn variance(&self) -> f64 {
        self.index_set
            .indices()
            .iter()
            .zip(&self.coeffs)
            .filter(|(i, _)| !i.is_zero())
            .map(|(_, c)| c * c)
            .sum()
    }

    /// Squared L2 norm: sum of squared coefficients.
    pub fn norm_squared(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum()
    }

    /// `self - other` on the union of both index sets.
    pub fn sub(&self, other: &Surrogate) -> Result<Surrogate, FitError> {
        if self.domain != other.domain {
            return Err(FitError::Invalid("surrogates live on different boxes".into()));
        }
        let mut set = self.index_set.clone();
        set.extend(other.index_set.indices().iter().cloned())?;
        let mut coeffs = vec![0.0; set.len()];
        for (i, c) in self.index_set.indices().iter().zip(&self.coeffs) {
            coeffs[set.position(i).expect("member")] += c;
        }
        for (i, c) in other.index_set.indices().iter().zip(&other.coeffs) {
            coeffs[set.position(i).expect("member")] -= c;
        }
        Surrogate::new(self.domain.clone(), set, coeffs)
    }

    pub fn to_json(&self) -> Result<String, FitError> {
        let file = SurrogateFile {
            schema: SURROGATE_SCHEMA.into(),
            basis: BASIS_TAG.into(),
            fingerprint: self.fingerprint.clone(),
            lows: self.domain.lows.clone(),
            highs: self.domain.highs.clone(),
            kind: self.index_set.kind(),
            indices: self.index_set.indices().to_vec(),
            coeffs: self.coeffs.clone(),
        };
        serde_json::to_string_pretty(&file).map_err(|e| FitError::Invalid(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self, FitError> {
        let file: SurrogateFile = serde_json::from_str(text).map_err(|e| FitError::Invalid(e.to_string()))?;
        if file.schema != SURROGATE_SCHEMA || file.basis != BASIS_TAG {
            return Err(FitError::SchemaMismatch(format!("{} / {}", file.schema, file.basis)));
        }
        let domain = ParamBox::new(file.lows, file.highs)?;
        let set = IndexSet::from_indices(domain.dim(), file.indices)?.with_kind(file.kind);
        Ok(Surrogate::new(domain, set, file.coeffs)?.with_fingerprint(file.fingerprint))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_surrogate() {
        let s = Surrogate::constant(ParamBox::unit(3), 0.7);
        assert_eq!(s.eval(&[0.1, 0.5, 0.9]).unwrap(), 0.7);
        assert_eq!(s.variance(), 0.0);
        assert!(s.eval(&[1.5, 0.5, 0.5]).is_err());
        assert_eq!(s.eval_extrapolate(&[1.5, 0.5, 0.5]), 0.7);
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let set = IndexSet::tensor_product(2, 2);
        let coeffs: Vec<f64> = (0..set.len()).map(|k| (k as f64 + 0.1).sqrt() / 3.0).collect();
        let s = Surrogate::new(ParamBox::new(vec![550.0, 0.19], vec![580.0, 0.57]).unwrap(), set, coeffs)
            .unwrap()
            .with_fingerprint("abc");
        let back = Surrogate::from_json(&s.to_json().unwrap()).unwrap();
        assert_eq!(back, s);
        for (a, b) in back.coeffs().iter().zip(s.coeffs()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }
}
