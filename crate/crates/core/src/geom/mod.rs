//! Core 3D geometry: convex hulls, volumetric discretization, surface
//! sampling, and mesh distance.

mod cloud;
mod distance;
mod grid;
mod hull;
mod mesh;
mod voxel;

pub use cloud::{estimate_normals, PointCloud};
pub use distance::{closest_point_on_triangle, hausdorff_normalized, point_mesh_distance};
pub use grid::PointGrid;
pub use hull::{convex_hull, hull_volume};
pub use mesh::{sample_surface, TriMesh};
pub use voxel::{cell_complex, voxelize, Cell, CellComplex, VoxelGrid};

pub type Point3 = nalgebra::Point3<f64>;
pub type Vec3 = nalgebra::Vector3<f64>;

/// Axis-aligned bounding box of a point set. Panics on an empty slice.
pub fn bounding_box(points: &[Point3]) -> (Point3, Point3) {
    assert!(!points.is_empty(), "bounding_box of empty point set");
    let mut lo = points[0];
    let mut hi = points[0];
    for p in points {
        for k in 0..3 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    (lo, hi)
}
