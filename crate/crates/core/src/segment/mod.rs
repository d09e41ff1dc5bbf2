//! Part segmentation: bottom-up initial clustering of the point cloud, then
//! hierarchical convexity-driven merging of volumetric cells.

pub mod cluster;
pub mod htc;
pub mod pipeline;

pub use cluster::{dissimilarity, initial_clustering, Cluster, ClusterWeights};
pub use htc::{assign_cells, cut_hierarchy, htc, htc_edge_cost, MergeNode, MergeStep, SegmentationResult};
pub use pipeline::{
    default_beta0, segment_object, SegmentParams, SegmentationFile, SegmentedObject,
};
