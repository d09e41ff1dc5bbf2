//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Convex hull input has fewer than 4 points or is coplanar/collinear.
    #[error("degenerate input: need at least 4 non-coplanar points")]
    DegenerateInput,

    #[error("mesh is not watertight")]
    NotWatertight,

    #[error("voxel resolution too coarse: only {occupied} occupied cells (need >= 8)")]
    ResolutionTooCoarse { occupied: usize },

    #[error("voxel grid is empty")]
    EmptyGrid,

    #[error("degenerate mesh: {0}")]
    DegenerateMesh(&'static str),

    #[error("too few points: have {have}, need {need}")]
    TooFewPoints { have: usize, need: usize },

    #[error("point cloud has no normals")]
    MissingNormals,

    #[error("cell graph has {components} components but only {target_parts} target parts")]
    DisconnectedComplex {
        components: usize,
        target_parts: usize,
    },

    #[error("hierarchy cut k={k} out of range [{min}, {max}]")]
    KOutOfRange { k: usize, min: usize, max: usize },

    #[error("part has no points")]
    EmptyPart,

    #[error("inertial parameters are in different frames: {a} vs {b}")]
    FrameMismatch { a: String, b: String },

    #[error("composed mass is zero; centre of mass undefined")]
    ZeroTotalMass,

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("no stalled samples found; stop-and-go identification needs dwells")]
    NoStalledSamples,

    #[error("{parts} parts exceed the stop-and-go limit of 4")]
    TooManyParts { parts: usize },

    #[error("regressor has a zero column (index {0})")]
    ZeroColumn(usize),

    #[error("pseudoinertia matrix is not symmetric positive-definite")]
    NotSpd,

    #[error("object parts overlap: part {a} intersects part {b}")]
    OverlappingParts { a: usize, b: usize },

    #[error("part {0} has non-positive density")]
    NonPositiveDensity(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("pose rotation is not orthonormal (or det != +1)")]
    InvalidPose,

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
