//! Sobol sequence with the Joe and Kuo `new-joe-kuo-6.21201` direction numbers.

use super::StatsError;

const BITS: usize = 32;

/// `(s, a, m_1..m_s)` for dimensions 2 and up.
const JOE_KUO: [(u32, u32, &[u32]); 15] = [
    (1, 0, &[1]),
    (2, 1, &[1, 3]),
    (3, 1, &[1, 3, 1]),
    (3, 2, &[1, 1, 1]),
    (4, 1, &[1, 1, 3, 3]),
    (4, 4, &[1, 3, 5, 13]),
    (5, 2, &[1, 1, 5, 5, 17]),
    (5, 4, &[1, 1, 5, 5, 5]),
    (5, 7, &[1, 1, 7, 11, 19]),
    (5, 11, &[1, 1, 5, 1, 1]),
    (5, 13, &[1, 1, 1, 3, 11]),
    (5, 14, &[1, 3, 5, 5, 31]),
    (6, 1, &[1, 3, 3, 9, 7, 49]),
    (6, 13, &[1, 1, 1, 15, 21, 21]),
    (6, 16, &[1, 3, 1, 13, 27, 49]),
];

pub const MAX_DIM: usize = JOE_KUO.len() + 1;

/// Unscrambled Sobol points in `[0,1)^d`, Gray-code order, origin skipped.
#[derive(Debug, Clone)]
pub struct SobolSampler {
    dim: usize,
    directions: Vec<[u32; BITS]>,
    state: Vec<u32>,
    index: u64,
}

impl SobolSampler {
    pub fn new(dim: usize) -> Result<Self, StatsError> {
        if dim == 0 || dim > MAX_DIM {
            return Err(StatsError::Invalid(format!("Sobol dimension must lie in 1..={MAX_DIM}")));
        }
        let mut directions = Vec::with_capacity(dim);
        let mut first = [0u32; BITS];
        for (k, v) in first.iter_mut().enumerate() {
            *v = 1 << (BITS - 1 - k);
        }
        directions.push(first);
        for &(s, a, m) in JOE_KUO.iter().take(dim - 1) {
            let s = s as usize;
            let mut v = [0u32; BITS];
            for k in 0..s.min(BITS) {
                v[k] = m[k] << (BITS - 1 - k);
            }
            for k in s..BITS {
                let mut x = v[k - s] ^ (v[k - s] >> s);
                for j in 1..s {
                    if (a >> (s - 1 - j)) & 1 == 1 {
                        x ^= v[k - j];
                    }
                }
                v[k] = x;
            }
            directions.push(v);
        }
        Ok(Self { dim, directions, state: vec![0; dim], index: 0 })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Advances past `n` points.
    pub fn skip(&mut self, n: u64) {
        for _ in 0..n {
            self.advance();
        }
    }

    fn advance(&mut self) {
        let c = self.index.trailing_ones() as usize;
        for (s, v) in self.state.iter_mut().zip(&self.directions) {
            *s ^= v[c.min(BITS - 1)];
        }
        self.index += 1;
    }

    pub fn next_into(&mut self, out: &mut [f64]) {
        self.advance();
        for (o, s) in out.iter_mut().zip(&self.state) {
            *o = f64::from(*s) / 4_294_967_296.0;
        }
    }

    pub fn next_point(&mut self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.next_into(&mut out);
        out
    }

    /// The next `n` points, row-major.
    pub fn take(&mut self, n: usize) -> Vec<f64> {
        let mut out = vec![0.0; n * self.dim];
        for row in out.chunks_exact_mut(self.dim) {
            self.next_into(row);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_reference_points() {
        let mut s = SobolSampler::new(6).unwrap();
        let pts = s.take(1024);
        let row = |i: usize| &pts[(i - 1) * 6..i * 6];
        assert_eq!(row(1), &[0.5; 6]);
        assert_eq!(row(2), &[0.75, 0.25, 0.25, 0.25, 0.75, 0.75]);
        assert_eq!(row(5), &[0.875, 0.875, 0.125, 0.375, 0.875, 0.625]);
        assert_eq!(row(100), &[0.4140625, 0.2578125, 0.7734375, 0.7265625, 0.8828125, 0.7421875]);
        assert_eq!(
            row(1000),
            &[0.2197265625, 0.0966796875, 0.5185546875, 0.6767578125, 0.2802734375, 0.9072265625]
        );
        assert_eq!(
            row(1024),
            &[0.00146484375, 0.37646484375, 0.44775390625, 0.48681640625, 0.55712890625, 0.84423828125]
        );
    }

    #[test]
    fn rejects_bad_dimension() {
        assert!(SobolSampler::new(0).is_err());
        assert!(SobolSampler::new(MAX_DIM + 1).is_err());
    }
}
