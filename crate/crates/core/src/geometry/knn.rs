use nalgebra::Vector3;
use rayon::prelude::*;

use super::{GeometryError, PointCloud};
use crate::Scalar;

/// Reference sets larger than this are bucketed into a uniform grid.
pub const GRID_THRESHOLD: usize = 1000;

const PAR_MIN_QUERIES: usize = 512;

/// For each query point, the index of the Euclidean-nearest reference point
/// and that distance. Ties go to the smaller index.
pub fn nearest_neighbors<T: Scalar>(
    query: &PointCloud<T>,
    reference: &PointCloud<T>,
) -> Result<(Vec<usize>, Vec<T>), GeometryError> {
    nearest_neighbors_points(query.points(), reference.points())
}

pub fn nearest_neighbors_points<T: Scalar>(
    query: &[Vector3<T>],
    reference: &[Vector3<T>],
) -> Result<(Vec<usize>, Vec<T>), GeometryError> {
    if reference.is_empty() {
        return Err(GeometryError::EmptyReference);
    }
    let results: Vec<(usize, T)> = if reference.len() > GRID_THRESHOLD {
        let grid = Grid::build(reference);
        run(query, |q| grid.nearest(q, reference))
    } else {
        run(query, |q| exhaustive(q, reference))
    };
    Ok(results.into_iter().unzip())
}

fn run<T: Scalar>(query: &[Vector3<T>], f: impl Fn(&Vector3<T>) -> (usize, T) + Sync) -> Vec<(usize, T)> {
    if query.len() >= PAR_MIN_QUERIES {
        query.par_iter().map(&f).collect()
    } else {
        query.iter().map(f).collect()
    }
}

#[inline]
fn dist<T: Scalar>(a: &Vector3<T>, b: &Vector3<T>) -> T {
    (a - b).norm()
}

#[inline]
fn better<T: Scalar>(d: T, i: usize, best: (usize, T)) -> bool {
    d < best.1 || (d == best.1 && i < best.0)
}

fn exhaustive<T: Scalar>(q: &Vector3<T>, reference: &[Vector3<T>]) -> (usize, T) {
    let mut best = (0, dist(q, &reference[0]));
    for (i, r) in reference.iter().enumerate().skip(1) {
        let d = dist(q, r);
        if better(d, i, best) {
            best = (i, d);
        }
    }
    best
}

struct Grid<T: Scalar> {
    origin: Vector3<T>,
    cell: T,
    dims: [i64; 3],
    cells: Vec<Vec<u32>>,
}

impl<T: Scalar> Grid<T> {
    fn build(points: &[Vector3<T>]) -> Self {
        let mut lo = points[0];
        let mut hi = points[0];
        for p in points {
            for a in 0..3 {
                lo[a] = lo[a].min(p[a]);
                hi[a] = hi[a].max(p[a]);
            }
        }
        let extent = hi - lo;
        let max_extent = extent.max();
        let per_axis = (points.len() as f64).cbrt().ceil().max(1.0);
        let cell = if max_extent > T::zero() {
            max_extent / T::lit(per_axis)
        } else {
            T::one()
        };
        let mut dims = [1i64; 3];
        for a in 0..3 {
            let n = (extent[a] / cell).floor().as_f64() as i64 + 1;
            dims[a] = n.clamp(1, 4096);
        }
        let mut grid = Grid {
            origin: lo,
            cell,
            dims,
            cells: vec![Vec::new(); (dims[0] * dims[1] * dims[2]) as usize],
        };
        for (i, p) in points.iter().enumerate() {
            let c = grid.cell_of(p);
            let c = [
                c[0].clamp(0, dims[0] - 1),
                c[1].clamp(0, dims[1] - 1),
                c[2].clamp(0, dims[2] - 1),
            ];
            let slot = grid.slot(c);
            grid.cells[slot].push(i as u32);
        }
        grid
    }

    fn cell_of(&self, p: &Vector3<T>) -> [i64; 3] {
        let mut c = [0i64; 3];
        for a in 0..3 {
            let f = ((p[a] - self.origin[a]) / self.cell).floor().as_f64();
            c[a] = f.clamp(-1e15, 1e15) as i64;
        }
        c
    }

    #[inline]
    fn slot(&self, c: [i64; 3]) -> usize {
        ((c[2] * self.dims[1] + c[1]) * self.dims[0] + c[0]) as usize
    }

    fn nearest(&self, q: &Vector3<T>, reference: &[Vector3<T>]) -> (usize, T) {
        let qc = self.cell_of(q);
        let mut r_max = 0i64;
        for a in 0..3 {
            r_max = r_max.max((qc[a]).abs()).max((self.dims[a] - 1 - qc[a]).abs());
        }
        let mut best: Option<(usize, T)> = None;
        let mut r = 0i64;
        loop {
            self.visit_shell(qc, r, |slot| {
                for &i in &self.cells[slot] {
                    let i = i as usize;
                    let d = dist(q, &reference[i]);
                    match best {
                        Some(b) if !better(d, i, b) => {}
                        _ => best = Some((i, d)),
                    }
                }
            });
            if let Some((_, d)) = best {
                // Every unvisited cell lies at least r cells away from q's cell.
                let bound = self.cell * T::lit(r as f64 - 1e-3);
                if d < bound {
                    break;
                }
            }
            if r >= r_max {
                break;
            }
            r += 1;
        }
        best.expect("grid holds at least one point")
    }

    fn visit_shell(&self, qc: [i64; 3], r: i64, mut f: impl FnMut(usize)) {
        let range = |a: usize| {
            let lo = (qc[a] - r).max(0);
            let hi = (qc[a] + r).min(self.dims[a] - 1);
            (lo, hi)
        };
        let (x0, x1) = range(0);
        let (y0, y1) = range(1);
        let (z0, z1) = range(2);
        if x0 > x1 || y0 > y1 || z0 > z1 {
            return;
        }
        for z in z0..=z1 {
            let dz = (z - qc[2]).abs();
            for y in y0..=y1 {
                let dy = (y - qc[1]).abs();
                for x in x0..=x1 {
                    let dx = (x - qc[0]).abs();
                    if dx.max(dy).max(dz) != r {
                        continue;
                    }
                    f(self.slot([x, y, z]));
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn brute(query: &[Vector3<f64>], reference: &[Vector3<f64>]) -> (Vec<usize>, Vec<f64>) {
        query
            .iter()
            .map(|q| {
                let mut bi = 0;
                let mut bd = f64::INFINITY;
                for (i, r) in reference.iter().enumerate() {
                    let d = (q - r).norm();
                    if d < bd {
                        bd = d;
                        bi = i;
                    }
                }
                (bi, bd)
            })
            .unzip()
    }

    fn random_points(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<Vector3<f64>> {
        (0..n)
            .map(|_| Vector3::new(rng.random::<f64>(), rng.random::<f64>(), rng.random::<f64>()) * scale)
            .collect()
    }

    #[test]
    fn query_equals_reference() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let pts = random_points(&mut rng, 30, 1.0);
        let (idx, d) = nearest_neighbors_points(&pts, &pts).unwrap();
        assert_eq!(idx, (0..30).collect::<Vec<_>>());
        assert!(d.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn small_example() {
        let q = [Vector3::new(0.0, 0.0, 0.0)];
        let r = [Vector3::new(1.0, 0.0, 0.0), Vector3::new(0.0, 2.0, 0.0)];
        let (idx, d) = nearest_neighbors_points(&q, &r).unwrap();
        assert_eq!((idx[0], d[0]), (0, 1.0));
    }

    #[test]
    fn ties_prefer_smaller_index() {
        let q = [Vector3::new(0.0, 0.0, 0.0)];
        let r = [Vector3::new(0.0, 1.0, 0.0), Vector3::new(1.0, 0.0, 0.0)];
        assert_eq!(nearest_neighbors_points(&q, &r).unwrap().0, vec![0]);
    }

    #[test]
    fn empty_reference_is_error() {
        let q = [Vector3::new(0.0, 0.0, 0.0)];
        assert_eq!(
            nearest_neighbors_points::<f64>(&q, &[]),
            Err(GeometryError::EmptyReference)
        );
    }

    #[test]
    fn matches_brute_force_50() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let q = random_points(&mut rng, 50, 1.0);
        let r = random_points(&mut rng, 50, 1.0);
        assert_eq!(nearest_neighbors_points(&q, &r).unwrap(), brute(&q, &r));
    }

    #[test]
    fn grid_path_agrees_with_exhaustive() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let r = random_points(&mut rng, 3000, 0.3);
        let mut q = random_points(&mut rng, 800, 0.4);
        // Queries outside the reference bounding box as well.
        q.push(Vector3::new(-2.0, 5.0, 0.1));
        q.push(Vector3::new(10.0, 10.0, 10.0));
        let grid = Grid::build(&r);
        for p in &q {
            assert_eq!(grid.nearest(p, &r), exhaustive(p, &r));
        }
    }

    #[test]
    fn grid_handles_planar_and_duplicate_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut r: Vec<_> = (0..1500)
            .map(|_| Vector3::new(rng.random::<f64>(), rng.random::<f64>(), 0.0))
            .collect();
        r.extend(std::iter::repeat_n(Vector3::new(0.5, 0.5, 0.0), 20));
        let q = random_points(&mut rng, 200, 1.0);
        let grid = Grid::build(&r);
        for p in q.iter().chain([Vector3::new(0.5, 0.5, 0.0)].iter()) {
            assert_eq!(grid.nearest(p, &r), exhaustive(p, &r));
        }
    }
}
