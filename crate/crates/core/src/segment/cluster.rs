//! Bottom-up point clustering with a doubling similarity threshold.
//!
//! Points merge into clusters whenever the dissimilarity between cluster
//! representatives falls below a threshold that doubles each pass, until the
//! cluster count drops to the desired number. A final pass re-assigns
//! boundary points to their most similar adjacent cluster.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{Point3, PointCloud, PointGrid, Vec3};

/// Neighbourhood size of the point adjacency graph.
const KNN: usize = 8;

/// Weights of the position / colour / normal terms of the dissimilarity.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ClusterWeights {
    pub lambda_p: f64,
    pub lambda_l: f64,
    pub lambda_n: f64,
}

impl Default for ClusterWeights {
    fn default() -> Self {
        Self {
            lambda_p: 1.0,
            lambda_l: 0.01,
            lambda_n: 1.0,
        }
    }
}

/// Feature triple of a point or cluster representative.
#[derive(Debug, Clone, Copy)]
pub struct Features {
    pub position: Point3,
    pub colour: [f64; 3],
    pub normal: Vec3,
}

/// A point cluster with its representative member.
#[derive(Debug, Clone)]
pub struct Cluster {
    /// Sorted member point indices.
    pub member_ids: Vec<u32>,
    pub rep_position: Point3,
    pub rep_colour: [u8; 3],
    pub rep_normal: Vec3,
}

impl Cluster {
    fn features(&self) -> Features {
        Features {
            position: self.rep_position,
            colour: [
                self.rep_colour[0] as f64,
                self.rep_colour[1] as f64,
                self.rep_colour[2] as f64,
            ],
            normal: self.rep_normal,
        }
    }
}

/// The weighted dissimilarity
/// `lp ||p_i - p_j|| + ll ||l_i - l_j|| + ln (1 - |n_i . n_j|)`.
pub fn dissimilarity_features(a: &Features, b: &Features, w: &ClusterWeights) -> f64 {
    let dp = (a.position - b.position).norm();
    let dl = ((a.colour[0] - b.colour[0]).powi(2)
        + (a.colour[1] - b.colour[1]).powi(2)
        + (a.colour[2] - b.colour[2]).powi(2))
    .sqrt();
    let dn = 1.0 - a.normal.dot(&b.normal).abs();
    w.lambda_p * dp + w.lambda_l * dl + w.lambda_n * dn
}

/// Dissimilarity between two cluster representatives.
pub fn dissimilarity(a: &Cluster, b: &Cluster, w: &ClusterWeights) -> f64 {
    dissimilarity_features(&a.features(), &b.features(), w)
}

struct ClusterState {
    members: Vec<u32>,
    adjacent: BTreeSet<u32>,
    rep: Features,
}

fn point_features(cloud: &PointCloud, i: usize) -> Features {
    let c = cloud.colours()[i];
    Features {
        position: cloud.positions()[i],
        colour: [c[0] as f64, c[1] as f64, c[2] as f64],
        normal: cloud.normals()[i],
    }
}

/// Pick the member closest (in the weighted metric) to the feature mean.
fn medoid(cloud: &PointCloud, members: &[u32], w: &ClusterWeights, fallback: &Features) -> Features {
    let mut mean_p = Vec3::zeros();
    let mut mean_c = [0.0f64; 3];
    let mut mean_n = Vec3::zeros();
    for &i in members {
        let f = point_features(cloud, i as usize);
        mean_p += f.position.coords;
        for (m, c) in mean_c.iter_mut().zip(f.colour.iter()) {
            *m += c;
        }
        mean_n += f.normal;
    }
    let inv = 1.0 / members.len() as f64;
    let mean = Features {
        position: Point3::from(mean_p * inv),
        colour: [mean_c[0] * inv, mean_c[1] * inv, mean_c[2] * inv],
        normal: if mean_n.norm() > 1e-12 {
            mean_n.normalize()
        } else {
            fallback.normal
        },
    };
    let mut best_i = members[0];
    let mut best_d = f64::INFINITY;
    for &i in members {
        let f = point_features(cloud, i as usize);
        let d = dissimilarity_features(&f, &mean, w);
        if d < best_d {
            best_d = d;
            best_i = i;
        }
    }
    point_features(cloud, best_i as usize)
}

/// Upper bound of the dissimilarity over a cloud: once beta exceeds this,
/// further doubling cannot enable new merges.
fn max_dissimilarity(cloud: &PointCloud, w: &ClusterWeights) -> f64 {
    let (lo, hi) = crate::geom::bounding_box(cloud.positions());
    let diag = (hi - lo).norm();
    let max_colour = (3.0f64 * 255.0 * 255.0).sqrt();
    w.lambda_p * diag + w.lambda_l * max_colour + w.lambda_n + 1.0
}

/// Bottom-up clustering of a cloud into at most `desired` clusters.
pub fn initial_clustering(
    cloud: &PointCloud,
    w: &ClusterWeights,
    desired: usize,
    beta0: f64,
) -> Result<Vec<Cluster>> {
    if cloud.is_empty() {
        return Err(Error::TooFewPoints { have: 0, need: 1 });
    }
    if !cloud.has_normals() {
        return Err(Error::MissingNormals);
    }
    if desired < 1 {
        return Err(Error::InvalidParameter("desired clusters must be >= 1".into()));
    }
    if beta0 <= 0.0 || beta0.is_nan() {
        return Err(Error::InvalidParameter("beta0 must be > 0".into()));
    }

    let n = cloud.len();
    let grid = PointGrid::build(cloud.positions());
    // symmetrized k-nearest-neighbour graph
    let mut point_adj: Vec<BTreeSet<u32>> = vec![BTreeSet::new(); n];
    for i in 0..n {
        for j in grid.k_nearest(&cloud.positions()[i], KNN, Some(i)) {
            point_adj[i].insert(j as u32);
            point_adj[j].insert(i as u32);
        }
    }

    let mut assignment: Vec<u32> = (0..n as u32).collect();
    let mut clusters: BTreeMap<u32, ClusterState> = (0..n)
        .map(|i| {
            (
                i as u32,
                ClusterState {
                    members: vec![i as u32],
                    adjacent: point_adj[i].clone(),
                    rep: point_features(cloud, i),
                },
            )
        })
        .collect();

    let mut beta = beta0;
    let beta_cap = max_dissimilarity(cloud, w).max(beta0) * 2.0;
    while clusters.len() > desired {
        let mut merged_any = false;
        let ids: Vec<u32> = clusters.keys().copied().collect();
        for ci in ids {
            if !clusters.contains_key(&ci) {
                continue;
            }
            let mut tested: BTreeSet<u32> = BTreeSet::new();
            loop {
                let next = clusters[&ci]
                    .adjacent
                    .iter()
                    .copied()
                    .find(|cj| *cj != ci && !tested.contains(cj) && clusters.contains_key(cj));
                let Some(cj) = next else { break };
                tested.insert(cj);
                let d = dissimilarity_features(&clusters[&ci].rep, &clusters[&cj].rep, w);
                if d < beta {
                    // absorb cj into ci
                    let taken = clusters.remove(&cj).expect("cj exists");
                    for &m in &taken.members {
                        assignment[m as usize] = ci;
                    }
                    for &nb in &taken.adjacent {
                        if nb == ci || nb == cj {
                            continue;
                        }
                        if let Some(state) = clusters.get_mut(&nb) {
                            state.adjacent.remove(&cj);
                            state.adjacent.insert(ci);
                        }
                    }
                    let state = clusters.get_mut(&ci).expect("ci exists");
                    state.members.extend(taken.members);
                    let taken_adj: Vec<u32> = taken.adjacent.into_iter().collect();
                    for nb in taken_adj {
                        if nb != ci && nb != cj {
                            state.adjacent.insert(nb);
                        }
                    }
                    state.adjacent.remove(&cj);
                    state.rep = medoid(cloud, &state.members, w, &state.rep);
                    merged_any = true;
                }
            }
        }
        beta *= 2.0;
        if !merged_any && beta > beta_cap {
            // remaining clusters sit in different graph components
            break;
        }
    }

    // boundary refinement: move each border point to its most similar
    // adjacent cluster, decided on a snapshot and applied at once
    let mut moves: Vec<(usize, u32)> = Vec::new();
    for i in 0..n {
        let own = assignment[i];
        let mut candidates: BTreeSet<u32> = BTreeSet::new();
        candidates.insert(own);
        for &j in &point_adj[i] {
            candidates.insert(assignment[j as usize]);
        }
        if candidates.len() < 2 {
            continue;
        }
        let f = point_features(cloud, i);
        let mut best = own;
        let mut best_d = f64::INFINITY;
        for cid in candidates {
            let d = dissimilarity_features(&f, &clusters[&cid].rep, w);
            if d < best_d || (d == best_d && cid < best) {
                best_d = d;
                best = cid;
            }
        }
        if best != own {
            moves.push((i, best));
        }
    }
    for (i, cid) in moves {
        let old = assignment[i];
        assignment[i] = cid;
        if let Some(state) = clusters.get_mut(&old) {
            state.members.retain(|&m| m != i as u32);
        }
        clusters
            .get_mut(&cid)
            .expect("target cluster exists")
            .members
            .push(i as u32);
    }
    clusters.retain(|_, s| !s.members.is_empty());
    let mut out = Vec::with_capacity(clusters.len());
    for (_, mut state) in clusters {
        state.members.sort_unstable();
        state.rep = medoid(cloud, &state.members, w, &state.rep);
        let rep_colour = [
            state.rep.colour[0].round() as u8,
            state.rep.colour[1].round() as u8,
            state.rep.colour[2].round() as u8,
        ];
        out.push(Cluster {
            member_ids: state.members,
            rep_position: state.rep.position,
            rep_colour,
            rep_normal: state.rep.normal,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn feat(p: [f64; 3], c: [f64; 3], n: [f64; 3]) -> Features {
        Features {
            position: Point3::new(p[0], p[1], p[2]),
            colour: c,
            normal: Vec3::new(n[0], n[1], n[2]),
        }
    }

    #[test]
    fn dissimilarity_cases() {
        let w = ClusterWeights {
            lambda_p: 1.0,
            lambda_l: 0.01,
            lambda_n: 0.5,
        };
        let a = feat([0.0; 3], [10.0, 0.0, 0.0], [0.0, 0.0, 1.0]);
        assert_eq!(dissimilarity_features(&a, &a, &w), 0.0);

        // antiparallel normals count as identical orientation
        let b = feat([0.0; 3], [10.0, 0.0, 0.0], [0.0, 0.0, -1.0]);
        assert_eq!(dissimilarity_features(&a, &b, &w), 0.0);

        // hand evaluation: 1*1 + 0.01*10 + 0.5*(1-0) = 1.6
        let c = feat([1.0, 0.0, 0.0], [20.0, 0.0, 0.0], [1.0, 0.0, 0.0]);
        let d = dissimilarity_features(&a, &c, &w);
        assert!((d - 1.6).abs() < 1e-12, "got {d}");
    }

    #[test]
    fn dissimilarity_symmetric_nonnegative() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let w = ClusterWeights::default();
        for _ in 0..100 {
            let mut rand_feat = || {
                let nv = Vec3::new(
                    rng.random::<f64>() - 0.5,
                    rng.random::<f64>() - 0.5,
                    rng.random::<f64>() - 0.5,
                )
                .normalize();
                Features {
                    position: Point3::new(rng.random(), rng.random(), rng.random()),
                    colour: [
                        rng.random::<f64>() * 255.0,
                        rng.random::<f64>() * 255.0,
                        rng.random::<f64>() * 255.0,
                    ],
                    normal: nv,
                }
            };
            let a = rand_feat();
            let b = rand_feat();
            let d1 = dissimilarity_features(&a, &b, &ClusterWeights::default());
            let d2 = dissimilarity_features(&b, &a, &w);
            assert!((d1 - d2).abs() < 1e-12);
            assert!(d1 >= 0.0);
        }
    }

    fn flat_cloud(points: Vec<Point3>, colours: Vec<[u8; 3]>) -> PointCloud {
        let n = points.len();
        PointCloud::new(points, colours, vec![Vec3::z(); n], None).unwrap()
    }

    #[test]
    fn desired_equal_to_count_keeps_singletons() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let pts: Vec<Point3> = (0..50)
            .map(|_| Point3::new(rng.random(), rng.random(), 0.0))
            .collect();
        let cloud = flat_cloud(pts, vec![[100, 100, 100]; 50]);
        let clusters =
            initial_clustering(&cloud, &ClusterWeights::default(), 50, 0.05).unwrap();
        assert_eq!(clusters.len(), 50);
        assert!(clusters.iter().all(|c| c.member_ids.len() == 1));
    }

    #[test]
    fn colour_separated_patches_recovered() {
        // two planar patches, red and blue, separated by a 0.5 m gap
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut pts = Vec::new();
        let mut cols = Vec::new();
        for i in 0..2000 {
            let x = rng.random::<f64>() * 0.4;
            let y = rng.random::<f64>() * 0.4;
            if i < 1000 {
                pts.push(Point3::new(x, y, 0.0));
                cols.push([255, 0, 0]);
            } else {
                pts.push(Point3::new(x + 0.9, y, 0.0));
                cols.push([0, 0, 255]);
            }
        }
        let cloud = flat_cloud(pts, cols);
        let w = ClusterWeights {
            lambda_p: 1.0,
            lambda_l: 0.05,
            lambda_n: 0.5,
        };
        let clusters = initial_clustering(&cloud, &w, 2, 0.01).unwrap();
        assert_eq!(clusters.len(), 2);
        // oracle: memberships must match the construction exactly
        for c in &clusters {
            let reds = c.member_ids.iter().filter(|&&i| i < 1000).count();
            assert!(
                reds == 0 || reds == c.member_ids.len(),
                "cluster mixes patches: {reds}/{}",
                c.member_ids.len()
            );
        }
        let sizes: Vec<usize> = clusters.iter().map(|c| c.member_ids.len()).collect();
        assert_eq!(sizes.iter().sum::<usize>(), 2000);
        assert!(sizes.contains(&1000));
    }

    #[test]
    fn uniform_plane_collapses_to_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let pts: Vec<Point3> = (0..500)
            .map(|_| Point3::new(rng.random(), rng.random(), 0.0))
            .collect();
        let cloud = flat_cloud(pts, vec![[128, 128, 128]; 500]);
        let clusters =
            initial_clustering(&cloud, &ClusterWeights::default(), 1, 0.01).unwrap();
        assert_eq!(clusters.len(), 1);
        assert_eq!(clusters[0].member_ids.len(), 500);
    }

    #[test]
    fn representative_is_a_member() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let pts: Vec<Point3> = (0..300)
            .map(|_| Point3::new(rng.random(), rng.random(), 0.0))
            .collect();
        let cloud = flat_cloud(pts.clone(), vec![[10, 200, 10]; 300]);
        let clusters = initial_clustering(&cloud, &ClusterWeights::default(), 5, 0.02).unwrap();
        for c in &clusters {
            let found = c
                .member_ids
                .iter()
                .any(|&i| (pts[i as usize] - c.rep_position).norm() == 0.0);
            assert!(found, "representative is not a member point");
        }
    }

    #[test]
    fn missing_normals_error() {
        let cloud = PointCloud::new(
            vec![Point3::origin(), Point3::new(1.0, 0.0, 0.0)],
            vec![[0; 3]; 2],
            vec![],
            None,
        )
        .unwrap();
        assert!(matches!(
            initial_clustering(&cloud, &ClusterWeights::default(), 1, 0.1),
            Err(Error::MissingNormals)
        ));
    }
}
