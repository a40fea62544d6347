use super::SamplingError;
use crate::geometry::PointCloud;
use crate::Scalar;

/// Greedy farthest-point sampling starting from index 0.
///
/// Each pick maximises the distance to the nearest already-selected point;
/// ties go to the smallest index. Indices are returned in selection order.
pub fn farthest_point_sample<T: Scalar>(
    cloud: &PointCloud<T>,
    k: usize,
) -> Result<Vec<usize>, SamplingError> {
    let n = cloud.len();
    if k > n {
        return Err(SamplingError::TooManySamples { k, available: n });
    }
    if k == 0 {
        return Ok(Vec::new());
    }
    let pts = cloud.points();
    let mut min_sq = vec![T::max_value().expect("bounded float"); n];
    let mut taken = vec![false; n];
    let mut out = Vec::with_capacity(k);
    let mut last = 0usize;
    taken[0] = true;
    out.push(0);
    while out.len() < k {
        let anchor = pts[last];
        let mut best: Option<(usize, T)> = None;
        for i in 0..n {
            if taken[i] {
                continue;
            }
            let d = (pts[i] - anchor).norm_squared();
            if d < min_sq[i] {
                min_sq[i] = d;
            }
            match best {
                Some((_, b)) if min_sq[i] <= b => {}
                _ => best = Some((i, min_sq[i])),
            }
        }
        let (next, _) = best.expect("k <= n leaves a candidate");
        taken[next] = true;
        out.push(next);
        last = next;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cloud(pts: &[[f64; 3]]) -> PointCloud<f64> {
        PointCloud::from_slice(pts).unwrap()
    }

    /// Independent greedy re-implementation: recomputes every candidate's
    /// distance to the whole selected set at each step.
    fn greedy_oracle(pts: &[[f64; 3]], k: usize) -> Vec<usize> {
        let d = |a: &[f64; 3], b: &[f64; 3]| {
            ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
        };
        let mut sel = vec![0usize];
        while sel.len() < k {
            let mut best = (usize::MAX, -1.0f64);
            for i in 0..pts.len() {
                if sel.contains(&i) {
                    continue;
                }
                let m = sel.iter().map(|&j| d(&pts[i], &pts[j])).fold(f64::INFINITY, f64::min);
                if m > best.1 {
                    best = (i, m);
                }
            }
            sel.push(best.0);
        }
        sel
    }

    #[test]
    fn k_equals_n_returns_all() {
        let c = cloud(&[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 3.0, 0.0], [0.5, 0.5, 0.5]]);
        let mut idx = farthest_point_sample(&c, 4).unwrap();
        assert_eq!(idx[0], 0);
        idx.sort();
        assert_eq!(idx, vec![0, 1, 2, 3]);
    }

    #[test]
    fn square_picks_diagonal() {
        let c = cloud(&[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [1.0, 1.0, 0.0], [0.0, 1.0, 0.0]]);
        assert_eq!(farthest_point_sample(&c, 2).unwrap(), vec![0, 2]);
    }

    #[test]
    fn collinear_tie_break() {
        let c = cloud(&[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [2.0, 0.0, 0.0], [3.0, 0.0, 0.0]]);
        assert_eq!(farthest_point_sample(&c, 3).unwrap(), vec![0, 3, 1]);
    }

    #[test]
    fn too_many_is_error() {
        let c = cloud(&[[0.0, 0.0, 0.0]]);
        assert_eq!(
            farthest_point_sample(&c, 2),
            Err(SamplingError::TooManySamples { k: 2, available: 1 })
        );
    }

    #[test]
    fn duplicates_never_reselected() {
        let c = cloud(&[[0.0, 0.0, 0.0]; 5]);
        let mut idx = farthest_point_sample(&c, 5).unwrap();
        idx.sort();
        assert_eq!(idx, vec![0, 1, 2, 3, 4]);
    }

    proptest! {
        #[test]
        fn matches_independent_greedy(
            pts in prop::collection::vec(prop::array::uniform3(-1.0f64..1.0), 1..=12),
            k_frac in 0.0f64..=1.0,
        ) {
            let k = ((pts.len() as f64 * k_frac).ceil() as usize).clamp(1, pts.len());
            let c = cloud(&pts);
            prop_assert_eq!(farthest_point_sample(&c, k).unwrap(), greedy_oracle(&pts, k));
        }
    }
}
