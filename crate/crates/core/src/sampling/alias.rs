use rand::Rng;

use super::{SamplerSeed, SamplingError};
use crate::Scalar;

/// Walker–Vose alias table: O(N) construction, O(1) draws.
#[derive(Debug, Clone, PartialEq)]
pub struct AliasTable<T: Scalar> {
    prob: Vec<T>,
    alias: Vec<usize>,
}

impl<T: Scalar> AliasTable<T> {
    pub fn new(weights: &[T]) -> Result<Self, SamplingError> {
        let n = weights.len();
        if n == 0 {
            return Err(SamplingError::InvalidWeights("no weights".into()));
        }
        if let Some(i) = weights.iter().position(|w| !w.is_finite() || *w < T::zero()) {
            return Err(SamplingError::InvalidWeights(format!(
                "weight {} at index {i} is negative or not finite",
                weights[i].as_f64()
            )));
        }
        let total = weights.iter().fold(T::zero(), |a, w| a + *w);
        if !(total > T::zero()) {
            return Err(SamplingError::InvalidWeights("weights sum to zero".into()));
        }

        let scale = T::lit(n as f64) / total;
        let mut scaled: Vec<T> = weights.iter().map(|w| *w * scale).collect();
        let mut prob = vec![T::one(); n];
        let mut alias: Vec<usize> = (0..n).collect();
        let mut small = Vec::with_capacity(n);
        let mut large = Vec::with_capacity(n);
        for (i, s) in scaled.iter().enumerate().rev() {
            if *s < T::one() {
                small.push(i);
            } else {
                large.push(i);
            }
        }
        while let (Some(&s), Some(&l)) = (small.last(), large.last()) {
            small.pop();
            large.pop();
            prob[s] = scaled[s];
            alias[s] = l;
            scaled[l] = (scaled[l] + scaled[s]) - T::one();
            if scaled[l] < T::one() {
                small.push(l);
            } else {
                large.push(l);
            }
        }
        // Leftovers on either stack are numerically 1.
        for i in large.into_iter().chain(small) {
            prob[i] = T::one();
            alias[i] = i;
        }
        Ok(Self { prob, alias })
    }

    pub fn len(&self) -> usize {
        self.prob.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prob.is_empty()
    }

    pub fn prob(&self) -> &[T] {
        &self.prob
    }

    pub fn alias(&self) -> &[usize] {
        &self.alias
    }

    /// Selection probability of each index implied by `(prob, alias)`.
    pub fn marginals(&self) -> Vec<T> {
        let n = T::lit(self.len() as f64);
        let mut m = self.prob.clone();
        for (j, &a) in self.alias.iter().enumerate() {
            if a != j {
                m[a] += T::one() - self.prob[j];
            }
        }
        m.into_iter().map(|v| v / n).collect()
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let i = rng.random_range(0..self.prob.len());
        let u: f64 = rng.random();
        if u < self.prob[i].as_f64() {
            i
        } else {
            self.alias[i]
        }
    }

    pub fn sample_n(&self, count: usize, seed: SamplerSeed) -> Vec<usize> {
        let mut rng = seed.rng();
        (0..count).map(|_| self.sample(&mut rng)).collect()
    }
}
