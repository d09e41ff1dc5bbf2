//! End-to-end segmentation: initial clustering, voxelization, cell
//! assignment, hierarchical merging, and label back-propagation.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geom::{
    cell_complex, estimate_normals, voxelize, CellComplex, PointCloud, TriMesh,
};
use crate::segment::cluster::{
    dissimilarity_features, initial_clustering, Cluster, ClusterWeights, Features,
};
use crate::segment::htc::{assign_cells, htc, SegmentationResult};

/// Knobs of [`segment_object`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SegmentParams {
    pub weights: ClusterWeights,
    pub desired_clusters: usize,
    /// Voxel cell size; None picks bounding-box max extent / 64.
    pub cell_size: Option<f64>,
    pub target_parts: usize,
    /// Similarity threshold seed value; None uses the median heuristic.
    pub beta0: Option<f64>,
    pub seed: u64,
    /// Disable the warm start and run the merge from singleton cells.
    pub use_initial_clustering: bool,
}

impl Default for SegmentParams {
    fn default() -> Self {
        Self {
            weights: ClusterWeights::default(),
            desired_clusters: 50,
            cell_size: None,
            target_parts: 1,
            beta0: None,
            seed: 0,
            use_initial_clustering: true,
        }
    }
}

/// Default beta: a tenth of the median dissimilarity over 1000 random point
/// pairs.
pub fn default_beta0(cloud: &PointCloud, w: &ClusterWeights, seed: u64) -> f64 {
    let n = cloud.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xbe7a_0000);
    let mut ds: Vec<f64> = (0..1000)
        .map(|_| {
            let i = rng.random_range(0..n);
            let j = rng.random_range(0..n);
            let fi = Features {
                position: cloud.positions()[i],
                colour: {
                    let c = cloud.colours()[i];
                    [c[0] as f64, c[1] as f64, c[2] as f64]
                },
                normal: cloud.normals()[i],
            };
            let fj = Features {
                position: cloud.positions()[j],
                colour: {
                    let c = cloud.colours()[j];
                    [c[0] as f64, c[1] as f64, c[2] as f64]
                },
                normal: cloud.normals()[j],
            };
            dissimilarity_features(&fi, &fj, w)
        })
        .collect();
    ds.sort_by(f64::total_cmp);
    let median = ds[ds.len() / 2];
    (median * 0.1).max(1e-9)
}

/// Full segmentation output plus the geometry it was computed on.
#[derive(Debug, Clone)]
pub struct SegmentedObject {
    pub result: SegmentationResult,
    pub complex: CellComplex,
    pub clusters: Vec<Cluster>,
}

/// Segment a scanned object into approximately convex parts.
///
/// Pipeline: initial point clustering (unless disabled), voxelization of the
/// watertight mesh, nearest-point cell labelling, hierarchical merging, cut
/// to `target_parts`, and nearest-cell label back-propagation to the cloud.
pub fn segment_object(
    cloud: &PointCloud,
    mesh: &TriMesh,
    params: &SegmentParams,
) -> Result<SegmentedObject> {
    let cloud_owned;
    let cloud = if cloud.has_normals() {
        cloud
    } else {
        cloud_owned = estimate_normals(cloud, 12.min(cloud.len().saturating_sub(1)).max(3))?;
        &cloud_owned
    };

    let (lo, hi) = mesh.bounding_box();
    let ext = hi - lo;
    let cell_size = params
        .cell_size
        .unwrap_or_else(|| ext.x.max(ext.y).max(ext.z) / 64.0);
    let grid = voxelize(mesh, cell_size)?;
    let complex = cell_complex(&grid)?;

    let (clusters, initial_labels) = if params.use_initial_clustering {
        let beta0 = params
            .beta0
            .unwrap_or_else(|| default_beta0(cloud, &params.weights, params.seed));
        let clusters =
            initial_clustering(cloud, &params.weights, params.desired_clusters, beta0)?;
        let labels = assign_cells(&complex, &clusters, cloud)?;
        (clusters, labels)
    } else {
        (Vec::new(), (0..complex.len() as u32).collect())
    };

    let mut result = htc(&complex, &initial_labels, params.target_parts)?;
    result.point_labels = propagate_labels(&complex, &result.cell_labels, cloud, &grid);
    Ok(SegmentedObject {
        result,
        complex,
        clusters,
    })
}

/// Label cloud points by their containing (or nearest) occupied cell.
fn propagate_labels(
    complex: &CellComplex,
    cell_labels: &[u32],
    cloud: &PointCloud,
    grid: &crate::geom::VoxelGrid,
) -> Vec<u32> {
    use std::collections::HashMap;
    let mut coord_to_cell: HashMap<(i32, i32, i32), u32> = HashMap::new();
    for (i, cell) in complex.cells.iter().enumerate() {
        coord_to_cell.insert(cell.grid_coord, i as u32);
    }
    let cs = grid.cell_size;
    cloud
        .positions()
        .iter()
        .map(|p| {
            let base = (
                ((p.x - grid.origin.x) / cs).floor() as i32,
                ((p.y - grid.origin.y) / cs).floor() as i32,
                ((p.z - grid.origin.z) / cs).floor() as i32,
            );
            if let Some(&cell) = coord_to_cell.get(&base) {
                return cell_labels[cell as usize];
            }
            // surface points can fall just outside the occupied set; search
            // the 3x3x3 neighbourhood by centroid distance, then give up to
            // a full scan
            let mut best: Option<(f64, u32)> = None;
            for dx in -1..=1 {
                for dy in -1..=1 {
                    for dz in -1..=1 {
                        let key = (base.0 + dx, base.1 + dy, base.2 + dz);
                        if let Some(&cell) = coord_to_cell.get(&key) {
                            let d = (complex.cells[cell as usize].centroid - p).norm_squared();
                            if best.is_none_or(|(bd, bc)| d < bd || (d == bd && cell < bc)) {
                                best = Some((d, cell));
                            }
                        }
                    }
                }
            }
            let cell = best.map(|(_, c)| c).unwrap_or_else(|| {
                complex
                    .cells
                    .iter()
                    .enumerate()
                    .map(|(i, c)| ((c.centroid - p).norm_squared(), i as u32))
                    .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
                    .map(|(_, i)| i)
                    .expect("complex is nonempty")
            });
            cell_labels[cell as usize]
        })
        .collect()
}

/// Serialized segmentation artifact: labels, merge log, and the cell
/// geometry needed by downstream identification.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SegmentationFile {
    pub cell_labels: Vec<u32>,
    pub point_labels: Vec<u32>,
    pub merge_log: Vec<crate::segment::htc::MergeStep>,
    pub n_parts: u32,
    pub hull_eval_count: u64,
    pub cell_centroids: Vec<[f64; 3]>,
    pub cell_volume: f64,
    pub cell_size: f64,
}

impl SegmentationFile {
    pub fn from_segmented(seg: &SegmentedObject) -> Self {
        Self {
            cell_labels: seg.result.cell_labels.clone(),
            point_labels: seg.result.point_labels.clone(),
            merge_log: seg.result.merge_log.clone(),
            n_parts: seg.result.n_parts,
            hull_eval_count: seg.result.hull_evals,
            cell_centroids: seg
                .complex
                .cells
                .iter()
                .map(|c| [c.centroid.x, c.centroid.y, c.centroid.z])
                .collect(),
            cell_volume: seg.complex.cells.first().map(|c| c.volume).unwrap_or(0.0),
            cell_size: seg.complex.cell_size,
        }
    }

    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string(self)?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Group cell centroids into per-part point sets (object frame),
    /// ordered by part label.
    pub fn part_points(&self) -> Result<Vec<crate::inertia::PartPoints>> {
        let mut by_part: std::collections::BTreeMap<u32, Vec<crate::geom::Point3>> =
            std::collections::BTreeMap::new();
        for (i, &label) in self.cell_labels.iter().enumerate() {
            let c = self.cell_centroids[i];
            by_part
                .entry(label)
                .or_default()
                .push(crate::geom::Point3::new(c[0], c[1], c[2]));
        }
        by_part
            .into_iter()
            .map(|(label, positions)| crate::inertia::PartPoints::new(positions, label as usize))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{gce, use_error, SegPair};
    use crate::synth::{build_object, builtin_spec, GenOptions};

    #[test]
    fn single_cube_is_one_clean_part() {
        let spec = builtin_spec("cube").unwrap();
        let built = build_object(
            &spec,
            &GenOptions {
                points: 2000,
                ..GenOptions::default()
            },
        )
        .unwrap();
        let params = SegmentParams {
            target_parts: 1,
            cell_size: Some(0.1 / 12.0),
            ..SegmentParams::default()
        };
        let seg = segment_object(&built.cloud, &built.mesh, &params).unwrap();
        assert_eq!(seg.result.n_parts, 1);
        let truth = built.cloud.labels().unwrap();
        let pair = SegPair::new(&seg.result.point_labels, truth).unwrap();
        assert_eq!(use_error(&pair), 0.0);
        assert_eq!(gce(&pair), 0.0);
    }

    #[test]
    fn dumbbell_segments_close_to_truth() {
        let spec = builtin_spec("dumbbell3").unwrap();
        let built = build_object(
            &spec,
            &GenOptions {
                points: 4000,
                seed: 1,
                ..GenOptions::default()
            },
        )
        .unwrap();
        let params = SegmentParams {
            target_parts: 3,
            ..SegmentParams::default()
        };
        let seg = segment_object(&built.cloud, &built.mesh, &params).unwrap();
        assert_eq!(seg.result.n_parts, 3);
        let truth = built.cloud.labels().unwrap();
        let pair = SegPair::new(&seg.result.point_labels, truth).unwrap();
        let u = use_error(&pair);
        assert!(u <= 0.1, "USE {u}");
    }

    #[test]
    fn warm_start_cuts_hull_evaluations() {
        let spec = builtin_spec("lbeam2").unwrap();
        let built = build_object(
            &spec,
            &GenOptions {
                points: 3000,
                seed: 2,
                ..GenOptions::default()
            },
        )
        .unwrap();
        let cell_size = Some(0.18 / 24.0);
        let warm = segment_object(
            &built.cloud,
            &built.mesh,
            &SegmentParams {
                target_parts: 2,
                cell_size,
                ..SegmentParams::default()
            },
        )
        .unwrap();
        let cold = segment_object(
            &built.cloud,
            &built.mesh,
            &SegmentParams {
                target_parts: 2,
                cell_size,
                use_initial_clustering: false,
                ..SegmentParams::default()
            },
        )
        .unwrap();
        assert!(
            warm.result.hull_evals * 2 <= cold.result.hull_evals,
            "warm {} vs cold {}",
            warm.result.hull_evals,
            cold.result.hull_evals
        );
    }

    #[test]
    fn deterministic_pipeline() {
        let spec = builtin_spec("lbeam2").unwrap();
        let built = build_object(
            &spec,
            &GenOptions {
                points: 1500,
                seed: 3,
                ..GenOptions::default()
            },
        )
        .unwrap();
        let params = SegmentParams {
            target_parts: 2,
            cell_size: Some(0.02),
            seed: 9,
            ..SegmentParams::default()
        };
        let a = segment_object(&built.cloud, &built.mesh, &params).unwrap();
        let b = segment_object(&built.cloud, &built.mesh, &params).unwrap();
        assert_eq!(a.result.cell_labels, b.result.cell_labels);
        assert_eq!(a.result.point_labels, b.result.point_labels);
        assert_eq!(a.result.hull_evals, b.result.hull_evals);
    }
}
