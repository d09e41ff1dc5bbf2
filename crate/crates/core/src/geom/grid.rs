//! Uniform spatial hash over a point set for nearest-neighbour queries.

use std::collections::HashMap;

use super::{bounding_box, Point3};

/// Bucketed point index. Queries are exact (expanding-ring search) and ties
/// are broken by the lower point index, so results are deterministic.
pub struct PointGrid {
    cell: f64,
    origin: Point3,
    buckets: HashMap<(i32, i32, i32), Vec<u32>>,
    points: Vec<Point3>,
}

impl PointGrid {
    pub fn build(points: &[Point3]) -> Self {
        assert!(!points.is_empty());
        let (lo, hi) = bounding_box(points);
        let diag = (hi - lo).norm();
        // aim for a handful of points per bucket
        let cell = if diag > 0.0 {
            (diag / (points.len() as f64).cbrt()).max(diag * 1e-6)
        } else {
            1.0
        };
        let mut grid = PointGrid {
            cell,
            origin: lo,
            buckets: HashMap::new(),
            points: points.to_vec(),
        };
        for (i, p) in points.iter().enumerate() {
            let key = grid.key(p);
            grid.buckets.entry(key).or_default().push(i as u32);
        }
        // sorted buckets keep candidate enumeration deterministic
        for v in grid.buckets.values_mut() {
            v.sort_unstable();
        }
        grid
    }

    fn key(&self, p: &Point3) -> (i32, i32, i32) {
        (
            ((p.x - self.origin.x) / self.cell).floor() as i32,
            ((p.y - self.origin.y) / self.cell).floor() as i32,
            ((p.z - self.origin.z) / self.cell).floor() as i32,
        )
    }

    /// Indices of the k nearest points to `p`, ordered by (distance, index).
    /// `exclude` removes one index (typically the query point itself).
    pub fn k_nearest(&self, p: &Point3, k: usize, exclude: Option<usize>) -> Vec<usize> {
        let avail = self.points.len() - exclude.is_some() as usize;
        let k = k.min(avail);
        if k == 0 {
            return Vec::new();
        }
        let center = self.key(p);
        let mut best: Vec<(f64, u32)> = Vec::new();
        let mut ring = 0i32;
        loop {
            for dx in -ring..=ring {
                for dy in -ring..=ring {
                    for dz in -ring..=ring {
                        if dx.abs().max(dy.abs()).max(dz.abs()) != ring {
                            continue;
                        }
                        let key = (center.0 + dx, center.1 + dy, center.2 + dz);
                        if let Some(bucket) = self.buckets.get(&key) {
                            for &i in bucket {
                                if Some(i as usize) == exclude {
                                    continue;
                                }
                                let d = (self.points[i as usize] - p).norm_squared();
                                best.push((d, i));
                            }
                        }
                    }
                }
            }
            best.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            best.dedup_by_key(|e| e.1);
            if best.len() >= k {
                // ring r guarantees coverage of every point within
                // (r - 1) * cell of the query in any direction
                let kth = best[k - 1].0.sqrt();
                if ((ring - 1).max(0) as f64) * self.cell >= kth {
                    break;
                }
            }
            ring += 1;
            if ring > 20_000 {
                break;
            }
        }
        best.truncate(k);
        best.into_iter().map(|(_, i)| i as usize).collect()
    }

    /// Index of the nearest point to `p` (ties broken by lower index).
    pub fn nearest(&self, p: &Point3) -> usize {
        self.k_nearest(p, 1, None)[0]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn knn_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let pts: Vec<Point3> = (0..500)
            .map(|_| Point3::new(rng.random(), rng.random(), rng.random()))
            .collect();
        let grid = PointGrid::build(&pts);
        for qi in (0..pts.len()).step_by(37) {
            let q = pts[qi];
            let got = grid.k_nearest(&q, 8, Some(qi));
            let mut brute: Vec<(f64, usize)> = pts
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != qi)
                .map(|(i, p)| ((p - q).norm_squared(), i))
                .collect();
            brute.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let want: Vec<usize> = brute[..8].iter().map(|&(_, i)| i).collect();
            assert_eq!(got, want, "query {qi}");
        }
    }

    #[test]
    fn nearest_of_offgrid_query() {
        let pts = vec![
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(0.0, 2.0, 0.0),
        ];
        let grid = PointGrid::build(&pts);
        assert_eq!(grid.nearest(&Point3::new(0.9, 0.1, 0.0)), 1);
        assert_eq!(grid.nearest(&Point3::new(-5.0, -5.0, 0.0)), 0);
    }

    #[test]
    fn clustered_points_still_exact() {
        // two tight clusters far apart stress the ring termination bound
        let mut pts = Vec::new();
        for i in 0..50 {
            pts.push(Point3::new(i as f64 * 1e-4, 0.0, 0.0));
            pts.push(Point3::new(100.0 + i as f64 * 1e-4, 0.0, 0.0));
        }
        let grid = PointGrid::build(&pts);
        let got = grid.k_nearest(&Point3::new(0.0, 0.0, 0.0), 3, Some(0));
        assert_eq!(got, vec![2, 4, 6]);
    }
}
