use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{check_prob, AugmentError};
use crate::geometry::DepthImage;
use crate::sampling::SamplerSeed;

/// Depth corruption parameters. The default leaves images unchanged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DepthAugParams {
    /// Side of the square box filter; 1 disables blurring.
    pub blur_kernel: usize,
    /// Standard deviation of additive noise (meters).
    pub noise_sigma: f64,
    pub pixel_dropout_p: f64,
    /// Inclusive range of the number of zeroed ellipses.
    pub ellipse_count_range: [usize; 2],
    /// Range of ellipse semi-axes (pixels).
    pub ellipse_axes_range: [f64; 2],
}

impl Default for DepthAugParams {
    fn default() -> Self {
        Self {
            blur_kernel: 1,
            noise_sigma: 0.0,
            pixel_dropout_p: 0.0,
            ellipse_count_range: [0, 0],
            ellipse_axes_range: [4.0, 24.0],
        }
    }
}

impl DepthAugParams {
    /// Moderate corruption suitable for training-time use.
    pub fn training() -> Self {
        Self {
            blur_kernel: 3,
            noise_sigma: 0.002,
            pixel_dropout_p: 0.05,
            ellipse_count_range: [0, 3],
            ellipse_axes_range: [4.0, 24.0],
        }
    }

    pub fn validate(&self) -> Result<(), AugmentError> {
        let bad = |field, reason: &str| {
            Err(AugmentError::InvalidParams {
                field,
                reason: reason.to_string(),
            })
        };
        if self.blur_kernel == 0 || self.blur_kernel % 2 == 0 {
            return bad("blur_kernel", "must be odd and at least 1");
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return bad("noise_sigma", "must be finite and non-negative");
        }
        check_prob("pixel_dropout_p", self.pixel_dropout_p)?;
        if self.ellipse_count_range[0] > self.ellipse_count_range[1] {
            return bad("ellipse_count_range", "min exceeds max");
        }
        let [a0, a1] = self.ellipse_axes_range;
        if !(a0.is_finite() && a1.is_finite() && 0.0 < a0 && a0 <= a1) {
            return bad("ellipse_axes_range", "need 0 < min <= max");
        }
        Ok(())
    }
}

/// Mean of the valid pixels in each `k×k` window, written to valid pixels only.
fn box_blur(values: &[f64], w: usize, h: usize, k: usize) -> Vec<f64> {
    // Summed-area tables of depth and valid count, padded by one row/column.
    let stride = w + 1;
    let mut sum = vec![0.0; stride * (h + 1)];
    let mut cnt = vec![0u32; stride * (h + 1)];
    for v in 0..h {
        for u in 0..w {
            let d = values[v * w + u];
            let i = (v + 1) * stride + u + 1;
            sum[i] = d + sum[i - 1] + sum[i - stride] - sum[i - stride - 1];
            cnt[i] = (d > 0.0) as u32 + cnt[i - 1] + cnt[i - stride] - cnt[i - stride - 1];
        }
    }
    let r = k / 2;
    let mut out = values.to_vec();
    for v in 0..h {
        let (v0, v1) = (v.saturating_sub(r), (v + r + 1).min(h));
        for u in 0..w {
            if values[v * w + u] <= 0.0 {
                continue;
            }
            let (u0, u1) = (u.saturating_sub(r), (u + r + 1).min(w));
            let s = sum[v1 * stride + u1] - sum[v0 * stride + u1] - sum[v1 * stride + u0] + sum[v0 * stride + u0];
            let c = cnt[v1 * stride + u1] + cnt[v0 * stride + u0] - cnt[v0 * stride + u1] - cnt[v1 * stride + u0];
            out[v * w + u] = s / c as f64;
        }
    }
    out
}

/// Applies, in order: valid-pixel box blur, additive Gaussian noise on valid
/// pixels, i.i.d. pixel dropout, and a random number of zeroed ellipses.
///
/// Invalid (zero) pixels never become valid; noise that would drive a depth
/// to zero or below invalidates the pixel.
pub fn augment_depth(depth: &DepthImage, params: &DepthAugParams, seed: SamplerSeed) -> Result<DepthImage, AugmentError> {
    params.validate()?;
    let (w, h) = (depth.width(), depth.height());
    let mut rng = seed.rng();
    let mut values = if params.blur_kernel > 1 {
        box_blur(depth.values(), w, h, params.blur_kernel)
    } else {
        depth.values().to_vec()
    };
    if params.noise_sigma > 0.0 {
        let normal = Normal::new(0.0, params.noise_sigma).expect("validated sigma");
        for d in values.iter_mut().filter(|d| **d > 0.0) {
            *d = (*d + normal.sample(&mut rng)).max(0.0);
        }
    }
    if params.pixel_dropout_p > 0.0 {
        for d in values.iter_mut() {
            if rng.random::<f64>() < params.pixel_dropout_p {
                *d = 0.0;
            }
        }
    }
    let [c0, c1] = params.ellipse_count_range;
    let count = if c1 > c0 { rng.random_range(c0..=c1) } else { c0 };
    let [a0, a1] = params.ellipse_axes_range;
    for _ in 0..count {
        let cu = rng.random::<f64>() * w as f64;
        let cv = rng.random::<f64>() * h as f64;
        let mut axis = || if a1 > a0 { rng.random_range(a0..a1) } else { a0 };
        let (a, b) = (axis(), axis());
        let (s, c) = (rng.random::<f64>() * PI).sin_cos();
        let reach = a.max(b).ceil() as i64;
        for v in (cv as i64 - reach).max(0)..(cv as i64 + reach + 1).min(h as i64) {
            for u in (cu as i64 - reach).max(0)..(cu as i64 + reach + 1).min(w as i64) {
                let (du, dv) = (u as f64 + 0.5 - cu, v as f64 + 0.5 - cv);
                let (x, y) = (c * du + s * dv, -s * du + c * dv);
                if (x / a).powi(2) + (y / b).powi(2) <= 1.0 {
                    values[v as usize * w + u as usize] = 0.0;
                }
            }
        }
    }
    Ok(DepthImage::new(w, h, values).expect("augmentation keeps depths finite and non-negative"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp() -> DepthImage {
        let (w, h) = (64, 48);
        let values = (0..w * h)
            .map(|i| if i % 7 == 3 { 0.0 } else { 0.5 + 0.001 * (i % w) as f64 + 0.002 * (i / w) as f64 })
            .collect();
        DepthImage::new(w, h, values).unwrap()
    }

    #[test]
    fn defaults_are_identity() {
        let d = ramp();
        assert_eq!(augment_depth(&d, &DepthAugParams::default(), SamplerSeed::from_seed(3)).unwrap(), d);
    }

    #[test]
    fn full_dropout_invalidates_everything() {
        let p = DepthAugParams {
            pixel_dropout_p: 1.0,
            ..DepthAugParams::default()
        };
        assert_eq!(augment_depth(&ramp(), &p, SamplerSeed::from_seed(3)).unwrap().valid_count(), 0);
    }

    #[test]
    fn noise_standard_deviation() {
        let d = DepthImage::filled(100, 100, 1.0).unwrap();
        let p = DepthAugParams {
            noise_sigma: 0.01,
            ..DepthAugParams::default()
        };
        let out = augment_depth(&d, &p, SamplerSeed::from_seed(11)).unwrap();
        let diff: Vec<f64> = out.values().iter().map(|x| x - 1.0).collect();
        let mean = diff.iter().sum::<f64>() / diff.len() as f64;
        let sd = (diff.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (diff.len() - 1) as f64).sqrt();
        assert!((0.009..=0.011).contains(&sd), "{sd}");
    }

    #[test]
    fn blur_matches_direct_window_mean() {
        let d = ramp();
        let out = box_blur(d.values(), 64, 48, 5);
        for (u, v) in [(0usize, 0usize), (10, 10), (63, 47), (31, 0), (5, 40)] {
            let (mut s, mut c) = (0.0, 0);
            for y in v.saturating_sub(2)..(v + 3).min(48) {
                for x in u.saturating_sub(2)..(u + 3).min(64) {
                    if d.get(x, y) > 0.0 {
                        s += d.get(x, y);
                        c += 1;
                    }
                }
            }
            let expect = if d.get(u, v) > 0.0 { s / c as f64 } else { 0.0 };
            assert!((out[v * 64 + u] - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn never_revives_invalid_pixels() {
        let d = ramp();
        let out = augment_depth(&d, &DepthAugParams::training(), SamplerSeed::from_seed(5)).unwrap();
        for (a, b) in d.values().iter().zip(out.values()) {
            if *a == 0.0 {
                assert_eq!(*b, 0.0);
            }
        }
        assert_eq!(out, augment_depth(&d, &DepthAugParams::training(), SamplerSeed::from_seed(5)).unwrap());
    }

    #[test]
    fn ellipses_zero_their_interior() {
        let d = DepthImage::filled(64, 64, 1.0).unwrap();
        let p = DepthAugParams {
            ellipse_count_range: [2, 2],
            ellipse_axes_range: [6.0, 6.0],
            ..DepthAugParams::default()
        };
        let out = augment_depth(&d, &p, SamplerSeed::from_seed(1)).unwrap();
        let zeros = 64 * 64 - out.valid_count();
        // Two radius-6 discs, possibly clipped or overlapping.
        assert!(zeros > 0 && zeros <= 2 * 120, "{zeros}");
    }

    #[test]
    fn rejects_even_kernel() {
        let p = DepthAugParams {
            blur_kernel: 2,
            ..DepthAugParams::default()
        };
        assert!(matches!(p.validate(), Err(AugmentError::InvalidParams { field: "blur_kernel", .. })));
    }
}
