use super::{AssignmentError, AssignmentMatrix, LabelVector, MatrixKind};
use crate::Scalar;

fn cross_entropy<T: Scalar>(logits: impl Iterator<Item = T> + Clone, label: usize) -> T {
    let max = logits.clone().fold(T::min_value().unwrap(), |m, v| m.max(v));
    let lse = logits.clone().map(|v| (v - max).exp()).fold(T::zero(), |a, v| a + v).ln() + max;
    lse - logits.clone().nth(label).unwrap()
}

/// Bidirectional cross-entropy over raw logits.
///
/// Each observation row `A[i, :]` (`i >= 1`) is scored against `ŷ_o[i-1]`
/// and each model column `A[:, j]` (`j >= 1`) against `ŷ_m[j-1]`; label 0
/// addresses the token column or row. Both directions are averaged over
/// their points and then added.
pub fn infonce_loss<T: Scalar>(
    a: &AssignmentMatrix<T>,
    y_obs: &LabelVector,
    y_model: &LabelVector,
) -> Result<T, AssignmentError> {
    if a.kind() != MatrixKind::Raw {
        return Err(AssignmentError::WrongKind {
            expected: MatrixKind::Raw,
            found: a.kind(),
        });
    }
    let (n_o, n_m) = (a.n_obs(), a.n_model());
    if y_obs.len() != n_o {
        return Err(AssignmentError::LabelLengthMismatch {
            expected: n_o,
            found: y_obs.len(),
        });
    }
    if y_model.len() != n_m {
        return Err(AssignmentError::LabelLengthMismatch {
            expected: n_m,
            found: y_model.len(),
        });
    }
    let check = |labels: &[usize], max: usize| match labels.iter().position(|&l| l > max) {
        Some(index) => Err(AssignmentError::LabelOutOfRange {
            index,
            label: labels[index],
            max,
        }),
        None => Ok(()),
    };
    check(y_obs.labels(), n_m)?;
    check(y_model.labels(), n_o)?;

    let v = a.values();
    let mean = |sum: T, n: usize| if n == 0 { T::zero() } else { sum / T::lit(n as f64) };
    let obs_sum = (1..=n_o).fold(T::zero(), |acc, i| {
        acc + cross_entropy(v.row(i).iter().copied(), y_obs.labels()[i - 1])
    });
    let model_sum = (1..=n_m).fold(T::zero(), |acc, j| {
        acc + cross_entropy(v.column(j).iter().copied(), y_model.labels()[j - 1])
    });
    Ok(mean(obs_sum, n_o) + mean(model_sum, n_m))
}

/// Total loss across coarse and dense blocks: plain sum of every entry.
pub fn multi_block_loss<T: Scalar>(coarse: &[T], dense: &[T]) -> Result<T, AssignmentError> {
    if coarse.is_empty() {
        return Err(AssignmentError::Empty("coarse block losses"));
    }
    if dense.is_empty() {
        return Err(AssignmentError::Empty("dense block losses"));
    }
    Ok(coarse.iter().chain(dense).fold(T::zero(), |a, v| a + *v))
}
