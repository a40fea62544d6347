use nalgebra::{DMatrix, Vector3};
use serde::{Deserialize, Serialize};

use super::{FeatureProvider, Hypothesis, PipelineConfig, PipelineError, ProviderContext};
use crate::assignment::{attention_matrix, dual_softmax, AssignmentMatrix};
use crate::geometry::{solve_pose_pairs, PointCloud, RigidPose};
use crate::Scalar;

/// Fewest matched pairs for which a refinement step solves a new pose.
pub const MIN_REFINE_MATCHES: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct RefineOutcome<T: Scalar> {
    pub pose: RigidPose<T>,
    /// Observation points whose best match was a model point.
    pub matches: usize,
    /// True when the step kept the input pose (too few matches or a
    /// degenerate match set).
    pub fallback: bool,
}

/// Everything a refinement step needs that does not depend on the pose.
pub(crate) struct DenseProblem<'a, T: Scalar> {
    pub obs: &'a [Vector3<T>],
    pub model: &'a [Vector3<T>],
    /// Feature logits `(N_o + 1) × (N_m + 1)` of the dense samples.
    pub feature_logits: &'a DMatrix<T>,
    pub tau: T,
    pub pos_weight: T,
    /// Width of the spatial prior, in meters.
    pub pos_sigma: T,
    /// `exp((F - max F) / τ)`, absent when the feature logit range would
    /// underflow a shared exponent.
    feature_exp: Option<DMatrix<T>>,
}

/// Headroom kept below the exponent underflow limit for the spatial prior.
const PRIOR_HEADROOM: f64 = 40.0;

impl<'a, T: Scalar> DenseProblem<'a, T> {
    pub fn new(
        obs: &'a [Vector3<T>],
        model: &'a [Vector3<T>],
        feature_logits: &'a DMatrix<T>,
        tau: T,
        pos_weight: T,
        pos_sigma: T,
    ) -> Self {
        let (lo, hi) = feature_logits
            .iter()
            .fold((T::max_value().unwrap(), T::min_value().unwrap()), |(lo, hi), v| (lo.min(*v), hi.max(*v)));
        let inv = T::one() / tau;
        let feature_exp = (((hi - lo) * inv).as_f64() < T::exp_underflow_margin() - PRIOR_HEADROOM)
            .then(|| feature_logits.map(|v| ((v - hi) * inv).exp()));
        Self {
            obs,
            model,
            feature_logits,
            tau,
            pos_weight,
            pos_sigma,
            feature_exp,
        }
    }

    /// Coefficient `w / 2σ²` of the squared distance in the logits.
    fn prior_coefficient(&self) -> T {
        self.pos_weight / (T::lit(2.0) * self.pos_sigma * self.pos_sigma)
    }

    fn model_frame_obs(&self, pose: &RigidPose<T>) -> Vec<Vector3<T>> {
        let inv = pose.inverse();
        self.obs.iter().map(|p| inv.apply(p)).collect()
    }

    /// Feature logits minus `w·|pose⁻¹(o_i) - m_j|² / 2σ²` on the interior.
    pub fn logits(&self, pose: &RigidPose<T>) -> DMatrix<T> {
        let mut out = self.feature_logits.clone();
        if self.pos_weight == T::zero() {
            return out;
        }
        let q = self.model_frame_obs(pose);
        let rows = out.nrows();
        let c = self.prior_coefficient();
        for (col, m) in out.as_mut_slice().chunks_mut(rows).skip(1).zip(self.model) {
            for (v, qi) in col[1..].iter_mut().zip(&q) {
                *v -= c * (qi - m).norm_squared();
            }
        }
        out
    }

    /// Row-wise dual-softmax argmax of [`Self::logits`] at `pose`.
    ///
    /// With a shared exponent shift the spatial prior enters as one factor
    /// `exp(-c·d²/τ)` per interior entry on top of the precomputed feature
    /// exponentials; `scratch` holds the products between the two passes.
    pub fn row_argmax(&self, pose: &RigidPose<T>, scratch: &mut Vec<T>) -> Vec<(usize, T)> {
        let Some(fe) = &self.feature_exp else {
            return dual_softmax_row_argmax(&self.logits(pose), self.tau);
        };
        let (rows, cols) = fe.shape();
        let q = self.model_frame_obs(pose);
        let c = self.prior_coefficient() / self.tau;
        scratch.clear();
        scratch.extend_from_slice(fe.as_slice());
        let mut row_sum = vec![T::zero(); rows];
        let mut col_sum = vec![T::zero(); cols];
        for (j, col) in scratch.chunks_mut(rows).enumerate() {
            if j > 0 && c > T::zero() {
                let m = &self.model[j - 1];
                for (v, qi) in col[1..].iter_mut().zip(&q) {
                    *v *= (-c * (qi - m).norm_squared()).exp();
                }
            }
            let mut s = T::zero();
            for (r, v) in row_sum.iter_mut().zip(col.iter()) {
                *r += *v;
                s += *v;
            }
            col_sum[j] = s;
        }
        let inv_row: Vec<T> = row_sum.iter().map(|r| T::one() / *r).collect();
        let mut best: Vec<(usize, T)> = vec![(0, T::min_value().unwrap()); rows];
        for (j, col) in scratch.chunks(rows).enumerate() {
            let inv_col = T::one() / col_sum[j];
            for (i, v) in col.iter().enumerate().skip(1) {
                let a = (*v * inv_row[i]) * (*v * inv_col);
                if a > best[i].1 {
                    best[i] = (j, a);
                }
            }
        }
        best.into_iter().skip(1).map(|(j, a)| (j, a.min(T::one()))).collect()
    }
}

/// For each observation row `i >= 1`, the column maximising the dual-softmax
/// product and its value, ties to the smaller column.
///
/// Uses one shared exponent shift when the logit range allows it, falling
/// back to [`dual_softmax`] otherwise.
pub(crate) fn dual_softmax_row_argmax<T: Scalar>(logits: &DMatrix<T>, tau: T) -> Vec<(usize, T)> {
    let (rows, cols) = logits.shape();
    let (lo, hi) = logits
        .iter()
        .fold((logits[(0, 0)], logits[(0, 0)]), |(lo, hi), v| (lo.min(*v), hi.max(*v)));
    let argmax_rows = |score: &dyn Fn(usize, usize) -> T| -> Vec<(usize, T)> {
        (1..rows)
            .map(|i| {
                let mut best = (0, score(i, 0));
                for j in 1..cols {
                    let s = score(i, j);
                    if s > best.1 {
                        best = (j, s);
                    }
                }
                best
            })
            .collect()
    };
    if ((hi - lo) / tau).as_f64() >= T::exp_underflow_margin() {
        let a = dual_softmax(&AssignmentMatrix::raw(logits.clone()).expect("finite logits"), tau)
            .expect("positive temperature")
            .into_values();
        return argmax_rows(&|i, j| a[(i, j)]);
    }
    let inv = T::one() / tau;
    let mut e = logits.clone();
    e.as_mut_slice().iter_mut().for_each(|v| *v = ((*v - hi) * inv).exp());
    let col_sum: Vec<T> = e.column_iter().map(|c| c.sum()).collect();
    let mut row_sum = vec![T::zero(); rows];
    for col in e.column_iter() {
        for (r, v) in row_sum.iter_mut().zip(col.iter()) {
            *r += *v;
        }
    }
    // Ã_ij = (e_ij / r_i)(e_ij / c_j); the row factor is constant per row.
    let mut best: Vec<(usize, T)> = vec![(0, T::min_value().unwrap()); rows];
    for (j, col) in e.column_iter().enumerate() {
        let cj = col_sum[j];
        for (i, v) in col.iter().enumerate().skip(1) {
            let s = *v * *v / cj;
            if s > best[i].1 {
                best[i] = (j, s);
            }
        }
    }
    best.into_iter()
        .enumerate()
        .skip(1)
        .map(|(i, (j, s))| (j, (s / row_sum[i]).min(T::one())))
        .collect()
}

/// One dense matching + weighted SVD step from `pose`.
pub(crate) fn refine_step<T: Scalar>(
    pose: &RigidPose<T>,
    problem: &DenseProblem<'_, T>,
    scratch: &mut Vec<T>,
) -> RefineOutcome<T> {
    let best = problem.row_argmax(pose, scratch);
    let mut src = Vec::new();
    let mut dst = Vec::new();
    let mut w = Vec::new();
    for (i, (j, a)) in best.into_iter().enumerate() {
        if j == 0 {
            continue;
        }
        src.push(problem.model[j - 1]);
        dst.push(problem.obs[i]);
        w.push(a);
    }
    let matches = src.len();
    let keep = || RefineOutcome {
        pose: pose.clone(),
        matches,
        fallback: true,
    };
    if matches < MIN_REFINE_MATCHES {
        return keep();
    }
    match solve_pose_pairs(&src, &dst, &w) {
        Ok(pose) => RefineOutcome {
            pose,
            matches,
            fallback: false,
        },
        Err(_) => keep(),
    }
}

/// Refines a hypothesis once against dense samples.
///
/// Features come from `provider`. A Gaussian spatial prior subtracts
/// `w·d²/2σ²` from each logit, where `d` is the distance between the
/// observation mapped into the model frame by the inverse hypothesis and
/// the model point, `w = config.pos_weight` and `σ` is `config.pos_sigma`
/// times the extent of `model_dense`. Each observation keeps its dual-softmax argmax; points
/// whose argmax is the background column are dropped, and the remaining
/// pairs are solved by SVD weighted with their `Ã` entries.
pub fn refine_once<T: Scalar>(
    hyp: &Hypothesis<T>,
    obs_dense: &PointCloud<T>,
    model_dense: &PointCloud<T>,
    provider: &dyn FeatureProvider<T>,
    config: &PipelineConfig,
) -> Result<RefineOutcome<T>, PipelineError> {
    config.validate()?;
    if obs_dense.is_empty() {
        return Err(PipelineError::Empty("dense observation cloud"));
    }
    if model_dense.is_empty() {
        return Err(PipelineError::Empty("dense model cloud"));
    }
    let ctx = ProviderContext {
        seed: config.seed.split(3),
    };
    let (fo, fm) = provider.features(obs_dense, model_dense, &ctx)?;
    let logits = attention_matrix(&fo, &fm)?.into_values();
    let problem = DenseProblem::new(
        obs_dense.points(),
        model_dense.points(),
        &logits,
        T::lit(config.tau),
        T::lit(config.pos_weight),
        T::lit(config.pos_sigma) * model_dense.extent().max(T::lit(1e-9)),
    );
    Ok(refine_step(&hyp.pose, &problem, &mut Vec::new()))
}
