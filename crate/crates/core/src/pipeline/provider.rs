use nalgebra::{DMatrix, DVector, Vector3};
use rand::Rng;
use rand_distr::{Normal, StandardNormal};

use super::PipelineError;
use crate::assignment::FeatureSet;
use crate::geometry::{PointCloud, RigidPose};
use crate::sampling::SamplerSeed;
use crate::Scalar;

/// Per-call information handed to a provider.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ProviderContext {
    /// Randomness reserved for this call (e.g. feature noise).
    pub seed: SamplerSeed,
}

/// Source of per-point features and the two special tokens.
///
/// Implementations must return feature sets of equal dimension with one row
/// per input point, in input order. Providers are shared across refinement
/// threads, hence `Send + Sync`.
pub trait FeatureProvider<T: Scalar>: Send + Sync {
    fn name(&self) -> &str;

    /// Returns `(observation features with f_bg, model features with f_oc)`.
    fn features(
        &self,
        obs: &PointCloud<T>,
        model: &PointCloud<T>,
        ctx: &ProviderContext,
    ) -> Result<(FeatureSet<T>, FeatureSet<T>), PipelineError>;
}

fn normalize_rows(m: &mut DMatrix<f64>) {
    for mut row in m.row_iter_mut() {
        let n = row.norm();
        if n > 0.0 {
            row /= n;
        }
    }
}

fn cast_matrix<T: Scalar>(m: &DMatrix<f64>) -> DMatrix<T> {
    m.map(T::lit)
}

fn cast_vector<T: Scalar>(v: &DVector<f64>) -> DVector<T> {
    v.map(T::lit)
}

/// Ground-truth-aware features.
///
/// Both clouds are expressed in the model frame (observations through the
/// inverse of `gt_pose`) and encoded with multi-scale random Fourier
/// features, whose inner products approximate a Gaussian kernel of the
/// point distance. Two extra components make every token logit equal to
/// `threshold`: an observation point prefers a model point over background
/// exactly when their kernel similarity exceeds it.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleProvider<T: Scalar> {
    pub gt_pose: RigidPose<T>,
    /// Norm of the Gaussian perturbation added to each unit feature row.
    pub noise_sigma: f64,
    /// Number of Fourier components.
    pub distinct_dim: usize,
    pub threshold: f64,
    /// Kernel bandwidths as fractions of the model extent.
    pub scales: Vec<f64>,
    /// Seeds the Fourier frequencies.
    pub seed: u64,
}

impl<T: Scalar> OracleProvider<T> {
    pub fn new(gt_pose: RigidPose<T>, noise_sigma: f64, distinct_dim: usize) -> Self {
        Self {
            gt_pose,
            noise_sigma,
            distinct_dim,
            threshold: 0.5,
            scales: vec![0.25, 0.0625, 0.015625],
            seed: 0x5eed_0f_fea7,
        }
    }

    fn encode(&self, pts: &[Vector3<f64>], freqs: &[(Vector3<f64>, f64)], noise: SamplerSeed) -> DMatrix<f64> {
        let d = freqs.len();
        let mut m = DMatrix::from_fn(pts.len(), d, |i, k| (freqs[k].0.dot(&pts[i]) + freqs[k].1).cos());
        normalize_rows(&mut m);
        if self.noise_sigma > 0.0 {
            let normal = Normal::new(0.0, self.noise_sigma / (d as f64).sqrt()).expect("finite sigma");
            let mut rng = noise.rng();
            // Row-major draw order so the noise of point i does not depend on N.
            for i in 0..pts.len() {
                for k in 0..d {
                    m[(i, k)] += rng.sample(normal);
                }
            }
            normalize_rows(&mut m);
        }
        m
    }
}

impl<T: Scalar> FeatureProvider<T> for OracleProvider<T> {
    fn name(&self) -> &str {
        "oracle"
    }

    fn features(
        &self,
        obs: &PointCloud<T>,
        model: &PointCloud<T>,
        ctx: &ProviderContext,
    ) -> Result<(FeatureSet<T>, FeatureSet<T>), PipelineError> {
        if self.distinct_dim == 0 || self.scales.is_empty() || self.scales.iter().any(|s| !(*s > 0.0)) {
            return Err(PipelineError::Provider("oracle needs positive dimension and scales".into()));
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return Err(PipelineError::Provider(format!("invalid noise sigma {}", self.noise_sigma)));
        }
        if model.is_empty() {
            return Err(PipelineError::Empty("model cloud"));
        }
        let ext = model.extent().as_f64().max(1e-9);
        let mut rng = SamplerSeed::from_seed(self.seed).rng();
        let freqs: Vec<(Vector3<f64>, f64)> = (0..self.distinct_dim)
            .map(|k| {
                let ell = self.scales[k * self.scales.len() / self.distinct_dim] * ext;
                let w = Vector3::from_fn(|_, _| rng.sample::<f64, _>(StandardNormal)) / ell;
                (w, rng.random_range(0.0..std::f64::consts::TAU))
            })
            .collect();

        let to_model = self.gt_pose.inverse().cast::<f64>();
        let obs_pts: Vec<Vector3<f64>> = obs.points().iter().map(|p| to_model.apply(&p.map(|v| v.as_f64()))).collect();
        let model_pts: Vec<Vector3<f64>> = model.points().iter().map(|p| p.map(|v| v.as_f64())).collect();
        let fo = self.encode(&obs_pts, &freqs, ctx.seed.split(0));
        let fm = self.encode(&model_pts, &freqs, ctx.seed.split(1));

        let d = self.distinct_dim;
        let t = self.threshold;
        let widen = |f: &DMatrix<f64>, tail: [f64; 2]| {
            let mut out = f.clone().resize_horizontally(d + 2, 0.0);
            out.column_mut(d).fill(tail[0]);
            out.column_mut(d + 1).fill(tail[1]);
            out
        };
        let mut bg = DVector::zeros(d + 2);
        bg[d] = 0.5;
        bg[d + 1] = t;
        let mut oc = DVector::zeros(d + 2);
        oc[d] = t;
        oc[d + 1] = 0.5;
        Ok((
            FeatureSet::new(cast_matrix(&widen(&fo, [1.0, 0.0])), cast_vector(&bg))?,
            FeatureSet::new(cast_matrix(&widen(&fm, [0.0, 1.0])), cast_vector(&oc))?,
        ))
    }
}

/// Unit-norm Gaussian features carrying no geometric information.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RandomProvider {
    pub dim: usize,
    pub seed: u64,
}

impl RandomProvider {
    pub fn new(seed: u64) -> Self {
        Self { dim: 32, seed }
    }

    fn rows(&self, n: usize, seed: SamplerSeed) -> DMatrix<f64> {
        let mut rng = seed.rng();
        let mut m = DMatrix::zeros(n, self.dim);
        for i in 0..n {
            for k in 0..self.dim {
                m[(i, k)] = rng.sample(StandardNormal);
            }
        }
        normalize_rows(&mut m);
        m
    }
}

impl<T: Scalar> FeatureProvider<T> for RandomProvider {
    fn name(&self) -> &str {
        "random"
    }

    fn features(
        &self,
        obs: &PointCloud<T>,
        model: &PointCloud<T>,
        _ctx: &ProviderContext,
    ) -> Result<(FeatureSet<T>, FeatureSet<T>), PipelineError> {
        if self.dim == 0 {
            return Err(PipelineError::Provider("random provider needs dim >= 1".into()));
        }
        let base = SamplerSeed::from_seed(self.seed);
        let tokens = self.rows(2, base.split(2));
        Ok((
            FeatureSet::new(cast_matrix(&self.rows(obs.len(), base.split(0))), cast_vector(&tokens.row(0).transpose()))?,
            FeatureSet::new(cast_matrix(&self.rows(model.len(), base.split(1))), cast_vector(&tokens.row(1).transpose()))?,
        ))
    }
}

/// Uses the feature rows already attached to the clouds, with fixed tokens.
#[derive(Debug, Clone, PartialEq)]
pub struct CloudFeatureProvider<T: Scalar> {
    pub background_token: DVector<T>,
    pub occlusion_token: DVector<T>,
}

impl<T: Scalar> FeatureProvider<T> for CloudFeatureProvider<T> {
    fn name(&self) -> &str {
        "cloud"
    }

    fn features(
        &self,
        obs: &PointCloud<T>,
        model: &PointCloud<T>,
        _ctx: &ProviderContext,
    ) -> Result<(FeatureSet<T>, FeatureSet<T>), PipelineError> {
        let fo = obs
            .features()
            .ok_or_else(|| PipelineError::Provider("observation cloud has no features".into()))?;
        let fm = model
            .features()
            .ok_or_else(|| PipelineError::Provider("model cloud has no features".into()))?;
        Ok((
            FeatureSet::new(fo.clone(), self.background_token.clone())?,
            FeatureSet::new(fm.clone(), self.occlusion_token.clone())?,
        ))
    }
}
