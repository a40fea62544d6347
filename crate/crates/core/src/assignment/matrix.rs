use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::AssignmentError;
use crate::Scalar;

/// Default softmax temperature.
pub const DEFAULT_TAU: f64 = 0.05;

/// Per-point feature rows plus the special token appended in front of them
/// (background token for observations, occlusion token for models).
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSet<T: Scalar> {
    features: DMatrix<T>,
    token: DVector<T>,
}

impl<T: Scalar> FeatureSet<T> {
    /// `features` is `N × C`, `token` has length `C`.
    pub fn new(features: DMatrix<T>, token: DVector<T>) -> Result<Self, AssignmentError> {
        if token.len() == 0 {
            return Err(AssignmentError::InvalidFeatures("feature dimension must be at least 1".into()));
        }
        if features.ncols() != token.len() {
            return Err(AssignmentError::InvalidFeatures(format!(
                "token has {} components, feature rows have {}",
                token.len(),
                features.ncols()
            )));
        }
        if !features.iter().chain(token.iter()).all(|v| v.is_finite()) {
            return Err(AssignmentError::InvalidFeatures("non-finite entry".into()));
        }
        Ok(Self { features, token })
    }

    pub fn len(&self) -> usize {
        self.features.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.features.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.token.len()
    }

    pub fn features(&self) -> &DMatrix<T> {
        &self.features
    }

    pub fn token(&self) -> &DVector<T> {
        &self.token
    }

    /// Rows `indices` (in that order) with the same token.
    pub fn select(&self, indices: &[usize]) -> Self {
        Self {
            features: self.features.select_rows(indices),
            token: self.token.clone(),
        }
    }

    /// `[token; features]`, shape `(N + 1) × C`.
    pub fn stacked(&self) -> DMatrix<T> {
        let mut out = DMatrix::zeros(self.len() + 1, self.dim());
        out.row_mut(0).copy_from(&self.token.transpose());
        out.rows_mut(1, self.len()).copy_from(&self.features);
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatrixKind {
    /// Logits `A`.
    Raw,
    /// Dual-softmax output `Ã`, entries in `[0, 1]`.
    Normalized,
}

/// `(N_o + 1) × (N_m + 1)` matrix with token row and column at index 0.
#[derive(Debug, Clone, PartialEq)]
pub struct AssignmentMatrix<T: Scalar> {
    values: DMatrix<T>,
    kind: MatrixKind,
}

impl<T: Scalar> AssignmentMatrix<T> {
    pub fn raw(values: DMatrix<T>) -> Result<Self, AssignmentError> {
        Self::check_shape(&values)?;
        if !values.iter().all(|v| v.is_finite()) {
            return Err(AssignmentError::InvalidMatrix("non-finite logit".into()));
        }
        Ok(Self {
            values,
            kind: MatrixKind::Raw,
        })
    }

    pub fn normalized(values: DMatrix<T>) -> Result<Self, AssignmentError> {
        Self::check_shape(&values)?;
        if !values.iter().all(|v| v.is_finite() && *v >= T::zero() && *v <= T::one()) {
            return Err(AssignmentError::InvalidMatrix("normalized entries must lie in [0, 1]".into()));
        }
        Ok(Self {
            values,
            kind: MatrixKind::Normalized,
        })
    }

    fn check_shape(values: &DMatrix<T>) -> Result<(), AssignmentError> {
        if values.nrows() == 0 || values.ncols() == 0 {
            return Err(AssignmentError::InvalidMatrix("matrix needs a token row and column".into()));
        }
        Ok(())
    }

    pub fn kind(&self) -> MatrixKind {
        self.kind
    }

    pub fn values(&self) -> &DMatrix<T> {
        &self.values
    }

    pub fn into_values(self) -> DMatrix<T> {
        self.values
    }

    /// Number of observation points `N_o`.
    pub fn n_obs(&self) -> usize {
        self.values.nrows() - 1
    }

    /// Number of model points `N_m`.
    pub fn n_model(&self) -> usize {
        self.values.ncols() - 1
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.values[(i, j)]
    }

    fn expect(&self, kind: MatrixKind) -> Result<(), AssignmentError> {
        if self.kind != kind {
            return Err(AssignmentError::WrongKind {
                expected: kind,
                found: self.kind,
            });
        }
        Ok(())
    }
}

/// `A = [f_bg; F_o] · [f_oc; F_m]ᵀ`.
pub fn attention_matrix<T: Scalar>(
    obs: &FeatureSet<T>,
    model: &FeatureSet<T>,
) -> Result<AssignmentMatrix<T>, AssignmentError> {
    if obs.dim() != model.dim() {
        return Err(AssignmentError::DimensionMismatch {
            obs: obs.dim(),
            model: model.dim(),
        });
    }
    AssignmentMatrix::raw(obs.stacked() * model.stacked().transpose())
}

/// Softmax of `a / tau` within each column, max-subtracted.
pub fn col_softmax<T: Scalar>(a: &DMatrix<T>, tau: T) -> DMatrix<T> {
    let mut out = a.clone();
    let rows = a.nrows();
    if rows == 0 {
        return out;
    }
    let inv = T::one() / tau;
    let body = |col: &mut [T]| {
        let max = col.iter().copied().fold(T::min_value().unwrap(), |m, v| m.max(v));
        let mut sum = T::zero();
        for v in col.iter_mut() {
            *v = ((*v - max) * inv).exp();
            sum += *v;
        }
        for v in col.iter_mut() {
            *v /= sum;
        }
    };
    if a.len() >= 1 << 15 {
        out.as_mut_slice().par_chunks_mut(rows).for_each(body);
    } else {
        out.as_mut_slice().chunks_mut(rows).for_each(body);
    }
    out
}

/// Softmax of `a / tau` within each row, max-subtracted.
pub fn row_softmax<T: Scalar>(a: &DMatrix<T>, tau: T) -> DMatrix<T> {
    col_softmax(&a.transpose(), tau).transpose()
}

/// `Ã = Softmax_row(A/τ) ⊙ Softmax_col(A/τ)`.
pub fn dual_softmax<T: Scalar>(a: &AssignmentMatrix<T>, tau: T) -> Result<AssignmentMatrix<T>, AssignmentError> {
    a.expect(MatrixKind::Raw)?;
    if !(tau.is_finite() && tau > T::zero()) {
        return Err(AssignmentError::InvalidTemperature(tau.as_f64()));
    }
    let rows = row_softmax(&a.values, tau);
    let mut out = col_softmax(&a.values, tau);
    out.component_mul_assign(&rows);
    // Rounding can push a product of two probabilities a hair above one.
    out.iter_mut().for_each(|v| *v = v.min(T::one()));
    AssignmentMatrix::normalized(out)
}

/// Token-row and token-column entries read off directly:
/// `bg_i = Ã[i+1, 0]`, `occ_j = Ã[0, j+1]`.
pub fn extract_marginals<T: Scalar>(a: &AssignmentMatrix<T>) -> Result<(Vec<T>, Vec<T>), AssignmentError> {
    a.expect(MatrixKind::Normalized)?;
    let bg = (1..=a.n_obs()).map(|i| a.get(i, 0)).collect();
    let occ = (1..=a.n_model()).map(|j| a.get(0, j)).collect();
    Ok((bg, occ))
}

/// Token entries renormalised by the mass of their own row (background) or
/// column (occlusion): `bg_i = Ã[i,0] / Σ_j Ã[i,j]`, `occ_j = Ã[0,j] / Σ_i Ã[i,j]`.
///
/// The raw token row of `Ã` is shared by every model point, so its entries
/// cannot all approach one at once; this form measures, per point, how much
/// of its own assignment mass sits on the token. Rows or columns without
/// mass report 1 (nothing supports a match).
pub fn conditional_marginals<T: Scalar>(a: &AssignmentMatrix<T>) -> Result<(Vec<T>, Vec<T>), AssignmentError> {
    a.expect(MatrixKind::Normalized)?;
    let v = &a.values;
    let ratio = |num: T, den: T| {
        if den > T::zero() {
            (num / den).min(T::one())
        } else {
            T::one()
        }
    };
    let bg = (1..=a.n_obs()).map(|i| ratio(v[(i, 0)], v.row(i).sum())).collect();
    let occ = (1..=a.n_model()).map(|j| ratio(v[(0, j)], v.column(j).sum())).collect();
    Ok((bg, occ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn fs(rows: &[&[f64]], token: &[f64]) -> FeatureSet<f64> {
        let c = token.len();
        let m = DMatrix::from_fn(rows.len(), c, |i, j| rows[i][j]);
        FeatureSet::new(m, DVector::from_column_slice(token)).unwrap()
    }

    fn raw(rows: &[&[f64]]) -> AssignmentMatrix<f64> {
        AssignmentMatrix::raw(DMatrix::from_fn(rows.len(), rows[0].len(), |i, j| rows[i][j])).unwrap()
    }

    #[test]
    fn all_ones_attention() {
        let e1 = [1.0, 0.0];
        let a = attention_matrix(&fs(&[&e1], &e1), &fs(&[&e1], &e1)).unwrap();
        assert_eq!(a.values(), &DMatrix::from_element(2, 2, 1.0));
        assert_eq!(a.kind(), MatrixKind::Raw);
    }

    #[test]
    fn orthogonal_one_hot_attention_is_zero() {
        let e = |k: usize| {
            let mut v = [0.0; 4];
            v[k] = 1.0;
            v
        };
        let a = attention_matrix(&fs(&[&e(0)], &e(2)), &fs(&[&e(1)], &e(3))).unwrap();
        assert_eq!(a.values(), &DMatrix::zeros(2, 2));
    }

    #[test]
    fn attention_equals_looped_dot_products() {
        let obs_rows: [&[f64]; 3] = [&[0.3, -1.2], &[2.0, 0.5], &[-0.7, 0.1]];
        let model_rows: [&[f64]; 2] = [&[1.5, 0.25], &[-0.4, 0.9]];
        let (bg, oc) = ([0.2, 0.8], [-1.0, 0.6]);
        let a = attention_matrix(&fs(&obs_rows, &bg), &fs(&model_rows, &oc)).unwrap();
        let orow = |i: usize| if i == 0 { &bg[..] } else { obs_rows[i - 1] };
        let mrow = |j: usize| if j == 0 { &oc[..] } else { model_rows[j - 1] };
        assert_eq!(a.values().shape(), (4, 3));
        for i in 0..4 {
            for j in 0..3 {
                let mut dot = 0.0;
                for c in 0..2 {
                    dot += orow(i)[c] * mrow(j)[c];
                }
                assert!((a.get(i, j) - dot).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn attention_dimension_mismatch() {
        let r = attention_matrix(&fs(&[&[1.0]], &[1.0]), &fs(&[&[1.0, 0.0]], &[0.0, 1.0]));
        assert_eq!(r, Err(AssignmentError::DimensionMismatch { obs: 1, model: 2 }));
    }

    #[test]
    fn uniform_dual_softmax_and_marginals() {
        let a = AssignmentMatrix::raw(DMatrix::<f64>::from_element(4, 6, 0.3)).unwrap();
        let t = dual_softmax(&a, 0.05).unwrap();
        let expect = 1.0 / (4.0 * 6.0);
        assert!(t.values().iter().all(|v| (v - expect).abs() < 1e-15));
        let (bg, occ) = extract_marginals(&t).unwrap();
        assert_eq!((bg.len(), occ.len()), (3, 5));
        assert!(bg.iter().chain(&occ).all(|v| (v - expect).abs() < 1e-15));
    }

    #[test]
    fn hand_two_by_two_dual_softmax() {
        let t = dual_softmax(&raw(&[&[0.0, 1.0], &[1.0, 0.0]]), 1.0).unwrap();
        // σ = e / (1 + e); diagonal (1 - σ)², off-diagonal σ².
        let (hi, lo) = (0.534446645388523, 0.07232948812851325);
        assert!((t.get(0, 1) - hi).abs() < 1e-15 && (t.get(1, 0) - hi).abs() < 1e-15);
        assert!((t.get(0, 0) - lo).abs() < 1e-15 && (t.get(1, 1) - lo).abs() < 1e-15);
    }

    #[test]
    fn low_temperature_limit() {
        let a = raw(&[&[3.0, 0.1, 0.2], &[0.0, 2.5, -1.0], &[0.4, 0.3, 1.8]]);
        let t = dual_softmax(&a, 1e-4).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((t.get(i, j) - want).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn kind_and_temperature_checked() {
        let a = raw(&[&[0.0, 1.0], &[1.0, 0.0]]);
        assert!(matches!(extract_marginals(&a), Err(AssignmentError::WrongKind { .. })));
        assert!(matches!(dual_softmax(&a, 0.0), Err(AssignmentError::InvalidTemperature(_))));
        let t = dual_softmax(&a, 1.0).unwrap();
        assert!(matches!(dual_softmax(&t, 1.0), Err(AssignmentError::WrongKind { .. })));
    }

    /// A model point carrying the occlusion token itself, orthogonal to every
    /// observation feature.
    fn occluded_model_point() -> AssignmentMatrix<f64> {
        let e = |k: usize| {
            let mut v = [0.0; 4];
            v[k] = 1.0;
            v
        };
        let obs = fs(&[&e(1), &e(2)], &e(0));
        let model = fs(&[&e(1), &e(0), &e(2)], &e(0));
        dual_softmax(&attention_matrix(&obs, &model).unwrap(), 0.01).unwrap()
    }

    #[test]
    fn token_equal_model_point_is_occluded() {
        let t = occluded_model_point();
        let (bg, occ) = conditional_marginals(&t).unwrap();
        assert!(occ[1] > 0.99, "{occ:?}");
        assert!(occ[0] < 0.01 && occ[2] < 0.01, "{occ:?}");
        assert!(bg.iter().all(|b| *b < 0.01), "{bg:?}");
    }

    #[test]
    fn literal_token_row_is_capped_by_shared_row() {
        // Ã[0,0] and Ã[0,j] share identical logits, so the raw token-row entry
        // cannot exceed one half.
        let t = occluded_model_point();
        let (_, occ) = extract_marginals(&t).unwrap();
        assert!((occ[1] - 0.5).abs() < 1e-6, "{occ:?}");
        assert!((t.get(0, 0) - 0.5).abs() < 1e-6);
    }

    fn matrix_strategy() -> impl Strategy<Value = DMatrix<f64>> {
        (1usize..6, 1usize..6).prop_flat_map(|(r, c)| {
            prop::collection::vec(-3.0f64..3.0, r * c).prop_map(move |v| DMatrix::from_vec(r, c, v))
        })
    }

    proptest! {
        #[test]
        fn softmax_rows_and_columns_sum_to_one(a in matrix_strategy(), tau in 0.05f64..2.0) {
            let rs = row_softmax(&a, tau);
            let cs = col_softmax(&a, tau);
            for i in 0..a.nrows() {
                prop_assert!((rs.row(i).sum() - 1.0).abs() < 1e-9);
            }
            for j in 0..a.ncols() {
                prop_assert!((cs.column(j).sum() - 1.0).abs() < 1e-9);
            }
            let t = dual_softmax(&AssignmentMatrix::raw(a.clone()).unwrap(), tau).unwrap();
            for ((v, r), c) in t.values().iter().zip(rs.iter()).zip(cs.iter()) {
                prop_assert!(*v <= r.min(*c) + 1e-15);
            }
        }

        #[test]
        fn dual_softmax_shift_invariant(a in matrix_strategy(), shift in -50.0f64..50.0, tau in 0.05f64..2.0) {
            let t0 = dual_softmax(&AssignmentMatrix::raw(a.clone()).unwrap(), tau).unwrap();
            let shifted = a.map(|v| v + shift);
            let t1 = dual_softmax(&AssignmentMatrix::raw(shifted).unwrap(), tau).unwrap();
            for (x, y) in t0.values().iter().zip(t1.values().iter()) {
                prop_assert!((x - y).abs() < 1e-9);
            }
        }

        #[test]
        fn lower_temperature_sharpens(a in matrix_strategy()) {
            let (mut bi, mut bj, mut best) = (0, 0, f64::NEG_INFINITY);
            for j in 0..a.ncols() {
                for i in 0..a.nrows() {
                    if a[(i, j)] > best {
                        (bi, bj, best) = (i, j, a[(i, j)]);
                    }
                }
            }
            let unique = a.iter().filter(|v| **v == best).count() == 1;
            prop_assume!(unique);
            let raw = AssignmentMatrix::raw(a).unwrap();
            let mut prev = 0.0;
            for tau in [1.0, 0.5, 0.1, 0.05] {
                let m = dual_softmax(&raw, tau).unwrap().get(bi, bj);
                prop_assert!(m >= prev - 1e-12, "tau {}: {} < {}", tau, m, prev);
                prev = m;
            }
        }
    }
}
