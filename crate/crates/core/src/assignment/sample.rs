use super::{AssignmentError, AssignmentMatrix, MatrixKind};
use crate::sampling::{AliasTable, SamplerSeed};
use crate::Scalar;

/// Alias table over the interior of a normalized assignment matrix, built
/// once and drawn from repeatedly.
#[derive(Debug, Clone)]
pub struct CorrespondenceSampler<T: Scalar> {
    table: AliasTable<T>,
    n_obs: usize,
}

impl<T: Scalar> CorrespondenceSampler<T> {
    pub fn new(a: &AssignmentMatrix<T>) -> Result<Self, AssignmentError> {
        if a.kind() != MatrixKind::Normalized {
            return Err(AssignmentError::WrongKind {
                expected: MatrixKind::Normalized,
                found: a.kind(),
            });
        }
        let (n_obs, n_model) = (a.n_obs(), a.n_model());
        if n_obs == 0 || n_model == 0 {
            return Err(AssignmentError::ZeroInteriorMass);
        }
        // Column-major flattening of the interior: flat = (j-1)·N_o + (i-1).
        let interior = a.values().view((1, 1), (n_obs, n_model));
        let weights: Vec<T> = interior.iter().copied().collect();
        if !weights.iter().any(|w| *w > T::zero()) {
            return Err(AssignmentError::ZeroInteriorMass);
        }
        Ok(Self {
            table: AliasTable::new(&weights)?,
            n_obs,
        })
    }

    /// Draws `count` i.i.d. 1-based `(i, j)` pairs from one RNG stream.
    pub fn draw(&self, count: usize, seed: SamplerSeed) -> Vec<(usize, usize)> {
        self.table
            .sample_n(count, seed)
            .into_iter()
            .map(|f| (f % self.n_obs + 1, f / self.n_obs + 1))
            .collect()
    }
}

/// `count` i.i.d. correspondence pairs `(i, j)`, `i ∈ 1..=N_o`,
/// `j ∈ 1..=N_m`, drawn with probability proportional to `Ã[i, j]`.
pub fn sample_correspondences<T: Scalar>(
    a: &AssignmentMatrix<T>,
    count: usize,
    seed: SamplerSeed,
) -> Result<Vec<(usize, usize)>, AssignmentError> {
    Ok(CorrespondenceSampler::new(a)?.draw(count, seed))
}
