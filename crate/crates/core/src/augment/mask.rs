use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{check_prob, AugmentError};
use crate::geometry::BinaryMask;
use crate::sampling::SamplerSeed;

/// Mask corruption parameters. The default leaves masks unchanged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MaskAugParams {
    /// Disk dilation radius in pixels; 0 disables dilation.
    pub dilate_radius: usize,
    pub bbox_replace_p: f64,
    pub line_split_p: f64,
    pub region_drop_p: f64,
    /// Area of the dropped rectangle relative to the mask's bounding box.
    pub region_drop_area_frac: f64,
}

impl Default for MaskAugParams {
    fn default() -> Self {
        Self {
            dilate_radius: 0,
            bbox_replace_p: 0.0,
            line_split_p: 0.0,
            region_drop_p: 0.0,
            region_drop_area_frac: 0.25,
        }
    }
}

impl MaskAugParams {
    pub fn training() -> Self {
        Self {
            dilate_radius: 2,
            bbox_replace_p: 0.1,
            line_split_p: 0.2,
            region_drop_p: 0.2,
            region_drop_area_frac: 0.25,
        }
    }

    pub fn validate(&self) -> Result<(), AugmentError> {
        check_prob("bbox_replace_p", self.bbox_replace_p)?;
        check_prob("line_split_p", self.line_split_p)?;
        check_prob("region_drop_p", self.region_drop_p)?;
        if !(self.region_drop_area_frac > 0.0 && self.region_drop_area_frac < 1.0) {
            return Err(AugmentError::InvalidParams {
                field: "region_drop_area_frac",
                reason: format!("{} is outside (0, 1)", self.region_drop_area_frac),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaskAugOutput {
    pub mask: BinaryMask,
    /// Set when the sub-operations removed every pixel.
    pub emptied: bool,
}

fn dilate(mask: &BinaryMask, r: usize) -> BinaryMask {
    let (w, h) = (mask.width(), mask.height());
    let r = r as i64;
    let offsets: Vec<(i64, i64)> = (-r..=r)
        .flat_map(|dv| (-r..=r).map(move |du| (du, dv)))
        .filter(|(du, dv)| du * du + dv * dv <= r * r)
        .collect();
    let mut out = mask.clone();
    for v in 0..h {
        for u in 0..w {
            if !mask.get(u, v) {
                continue;
            }
            for (du, dv) in &offsets {
                let (x, y) = (u as i64 + du, v as i64 + dv);
                if x >= 0 && y >= 0 && (x as usize) < w && (y as usize) < h {
                    out.set(x as usize, y as usize, true);
                }
            }
        }
    }
    out
}

fn centroid(mask: &BinaryMask) -> (f64, f64) {
    let (mut su, mut sv, mut n) = (0.0, 0.0, 0usize);
    for v in 0..mask.height() {
        for u in 0..mask.width() {
            if mask.get(u, v) {
                su += u as f64;
                sv += v as f64;
                n += 1;
            }
        }
    }
    (su / n as f64, sv / n as f64)
}

/// Applies, in order and each with its own probability: disk dilation,
/// replacement by the filled bounding box, a split keeping one side of a
/// random line through the centroid, and removal of a random rectangle
/// covering `region_drop_area_frac` of the bounding box.
///
/// The same random numbers are drawn whatever the probabilities, so
/// changing one probability does not reshuffle the other sub-operations.
pub fn augment_mask(mask: &BinaryMask, params: &MaskAugParams, seed: SamplerSeed) -> Result<MaskAugOutput, AugmentError> {
    params.validate()?;
    if mask.is_empty() {
        return Err(AugmentError::EmptyMask);
    }
    let mut rng = seed.rng();
    let u_bbox: f64 = rng.random();
    let u_line: f64 = rng.random();
    let angle = rng.random::<f64>() * PI;
    let keep_positive: bool = rng.random();
    let u_drop: f64 = rng.random();
    let (fx, fy): (f64, f64) = (rng.random(), rng.random());

    let (w, h) = (mask.width(), mask.height());
    let mut out = if params.dilate_radius > 0 {
        dilate(mask, params.dilate_radius)
    } else {
        mask.clone()
    };
    if u_bbox < params.bbox_replace_p {
        let (u0, v0, u1, v1) = out.bbox().expect("non-empty");
        out = BinaryMask::from_fn(w, h, |u, v| (u0..=u1).contains(&u) && (v0..=v1).contains(&v));
    }
    if u_line < params.line_split_p {
        let (cu, cv) = centroid(&out);
        let (s, c) = angle.sin_cos();
        let side = BinaryMask::from_fn(w, h, |u, v| {
            let d = c * (u as f64 - cu) + s * (v as f64 - cv);
            if keep_positive {
                d >= 0.0
            } else {
                d < 0.0
            }
        });
        out = out.and(&side);
    }
    if u_drop < params.region_drop_p {
        if let Some((u0, v0, u1, v1)) = out.bbox() {
            let (bw, bh) = ((u1 - u0 + 1) as f64, (v1 - v0 + 1) as f64);
            let scale = params.region_drop_area_frac.sqrt();
            let (rw, rh) = ((bw * scale).round() as usize, (bh * scale).round() as usize);
            let ru = u0 + (fx * (bw as usize - rw + 1) as f64) as usize;
            let rv = v0 + (fy * (bh as usize - rh + 1) as f64) as usize;
            let hole = BinaryMask::from_fn(w, h, |u, v| !((ru..ru + rw).contains(&u) && (rv..rv + rh).contains(&v)));
            out = out.and(&hole);
        }
    }
    let emptied = out.is_empty();
    Ok(MaskAugOutput { mask: out, emptied })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> BinaryMask {
        BinaryMask::from_fn(64, 64, |u, v| (16..48).contains(&u) && (16..48).contains(&v))
    }

    fn blob() -> BinaryMask {
        BinaryMask::from_fn(64, 64, |u, v| {
            let (x, y) = (u as f64 - 30.0, v as f64 - 28.0);
            x * x / 300.0 + y * y / 120.0 <= 1.0
        })
    }

    #[test]
    fn defaults_are_identity() {
        let m = blob();
        let out = augment_mask(&m, &MaskAugParams::default(), SamplerSeed::from_seed(2)).unwrap();
        assert_eq!(out.mask, m);
        assert!(!out.emptied);
    }

    #[test]
    fn bbox_of_rectangle_is_fixed_point() {
        let p = MaskAugParams {
            bbox_replace_p: 1.0,
            ..MaskAugParams::default()
        };
        assert_eq!(augment_mask(&square(), &p, SamplerSeed::from_seed(9)).unwrap().mask, square());
    }

    #[test]
    fn line_split_halves_in_expectation() {
        let p = MaskAugParams {
            line_split_p: 1.0,
            ..MaskAugParams::default()
        };
        let m = square();
        let total: f64 = (0..1000)
            .map(|s| augment_mask(&m, &p, SamplerSeed::from_seed(s)).unwrap().mask.count() as f64 / m.count() as f64)
            .sum();
        let mean = total / 1000.0;
        assert!((0.4..=0.6).contains(&mean), "{mean}");
    }

    #[test]
    fn dilation_matches_distance_oracle() {
        let m = BinaryMask::from_fn(20, 20, |u, v| u == 10 && v == 10);
        let p = MaskAugParams {
            dilate_radius: 3,
            ..MaskAugParams::default()
        };
        let out = augment_mask(&m, &p, SamplerSeed::default()).unwrap().mask;
        for v in 0..20 {
            for u in 0..20 {
                let d2 = (u as i64 - 10).pow(2) + (v as i64 - 10).pow(2);
                assert_eq!(out.get(u, v), d2 <= 9);
            }
        }
    }

    #[test]
    fn region_drop_removes_requested_area() {
        let p = MaskAugParams {
            region_drop_p: 1.0,
            region_drop_area_frac: 0.25,
            ..MaskAugParams::default()
        };
        let out = augment_mask(&square(), &p, SamplerSeed::from_seed(4)).unwrap().mask;
        assert_eq!(square().count() - out.count(), 16 * 16);
    }

    #[test]
    fn only_dilation_grows() {
        let p = MaskAugParams {
            dilate_radius: 0,
            ..MaskAugParams::training()
        };
        for s in 0..50 {
            let m = blob();
            let out = augment_mask(&m, &p, SamplerSeed::from_seed(s)).unwrap();
            // Without dilation the result stays inside the bounding box.
            let (u0, v0, u1, v1) = m.bbox().unwrap();
            if let Some((a0, b0, a1, b1)) = out.mask.bbox() {
                assert!(a0 >= u0 && b0 >= v0 && a1 <= u1 && b1 <= v1);
            }
            assert_eq!(out.emptied, out.mask.is_empty());
        }
    }

    #[test]
    fn empty_input_is_rejected() {
        let m = BinaryMask::empty(8, 8);
        assert_eq!(augment_mask(&m, &MaskAugParams::default(), SamplerSeed::default()), Err(AugmentError::EmptyMask));
    }
}
