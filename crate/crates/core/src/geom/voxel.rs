//! Watertight-mesh voxelization and the voxel cell complex.
//!
//! A cell is occupied when its centre lies inside the mesh or when the cell
//! box intersects the surface. The second clause thickens the object so that
//! parts thinner than one cell still produce occupied cells.

use std::collections::{BTreeSet, HashMap};

use super::{Point3, TriMesh, Vec3};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct VoxelGrid {
    pub origin: Point3,
    pub cell_size: f64,
    /// Occupied cells by integer grid coordinate, ordered.
    pub occupied: BTreeSet<(i32, i32, i32)>,
}

impl VoxelGrid {
    pub fn cell_center(&self, c: (i32, i32, i32)) -> Point3 {
        Point3::new(
            self.origin.x + (c.0 as f64 + 0.5) * self.cell_size,
            self.origin.y + (c.1 as f64 + 0.5) * self.cell_size,
            self.origin.z + (c.2 as f64 + 0.5) * self.cell_size,
        )
    }

    pub fn occupied_volume(&self) -> f64 {
        self.occupied.len() as f64 * self.cell_size.powi(3)
    }
}

/// One volumetric cell of a [`CellComplex`].
#[derive(Debug, Clone)]
pub struct Cell {
    pub centroid: Point3,
    pub volume: f64,
    pub corners: [Point3; 8],
    pub grid_coord: (i32, i32, i32),
}

/// Volumetric cells plus their face-adjacency graph, the substrate for the
/// hierarchical merging stage.
#[derive(Debug, Clone)]
pub struct CellComplex {
    pub cells: Vec<Cell>,
    /// Face-sharing cell pairs (i < j), ordered.
    pub adjacency: Vec<(u32, u32)>,
    pub cell_size: f64,
}

impl CellComplex {
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Bounding-box volume over all cell corners.
    pub fn bbox_volume(&self) -> f64 {
        let mut lo = self.cells[0].corners[0];
        let mut hi = lo;
        for cell in &self.cells {
            for p in &cell.corners {
                for k in 0..3 {
                    lo[k] = lo[k].min(p[k]);
                    hi[k] = hi[k].max(p[k]);
                }
            }
        }
        (hi.x - lo.x) * (hi.y - lo.y) * (hi.z - lo.z)
    }
}

/// Voxelize a watertight mesh at the given cell size.
pub fn voxelize(mesh: &TriMesh, cell_size: f64) -> Result<VoxelGrid> {
    if !mesh.is_watertight() {
        return Err(Error::NotWatertight);
    }
    let (lo, hi) = mesh.bounding_box();
    let extent = hi - lo;
    let max_extent = extent.x.max(extent.y).max(extent.z);
    if cell_size <= 0.0 || cell_size.is_nan() || cell_size > max_extent {
        return Err(Error::InvalidParameter(format!(
            "cell_size {cell_size} outside (0, {max_extent}]"
        )));
    }
    let dims = [
        ((extent.x / cell_size).ceil() as i64).max(1),
        ((extent.y / cell_size).ceil() as i64).max(1),
        ((extent.z / cell_size).ceil() as i64).max(1),
    ];
    let clamp = |v: i64, d: i64| v.clamp(0, d - 1) as i32;

    let mut occupied: BTreeSet<(i32, i32, i32)> = BTreeSet::new();

    // surface pass: mark every cell whose box the triangle touches
    let half = Vec3::repeat(cell_size * 0.5);
    for fi in 0..mesh.faces().len() {
        let tri = mesh.face_points(fi);
        let (tlo, thi) = super::bounding_box(&tri);
        let i0 = clamp(((tlo.x - lo.x) / cell_size).floor() as i64, dims[0]);
        let i1 = clamp(((thi.x - lo.x) / cell_size).floor() as i64, dims[0]);
        let j0 = clamp(((tlo.y - lo.y) / cell_size).floor() as i64, dims[1]);
        let j1 = clamp(((thi.y - lo.y) / cell_size).floor() as i64, dims[1]);
        let k0 = clamp(((tlo.z - lo.z) / cell_size).floor() as i64, dims[2]);
        let k1 = clamp(((thi.z - lo.z) / cell_size).floor() as i64, dims[2]);
        for i in i0..=i1 {
            for j in j0..=j1 {
                for k in k0..=k1 {
                    if occupied.contains(&(i, j, k)) {
                        continue;
                    }
                    let center = Point3::new(
                        lo.x + (i as f64 + 0.5) * cell_size,
                        lo.y + (j as f64 + 0.5) * cell_size,
                        lo.z + (k as f64 + 0.5) * cell_size,
                    );
                    if tri_box_overlap(&center, &half, &tri) {
                        occupied.insert((i, j, k));
                    }
                }
            }
        }
    }

    // interior pass: winding number at the centre of the remaining cells.
    // Cells not touched by the surface are at least half a cell away from it,
    // so the winding test is unambiguous there.
    for i in 0..dims[0] as i32 {
        for j in 0..dims[1] as i32 {
            for k in 0..dims[2] as i32 {
                if occupied.contains(&(i, j, k)) {
                    continue;
                }
                let center = Point3::new(
                    lo.x + (i as f64 + 0.5) * cell_size,
                    lo.y + (j as f64 + 0.5) * cell_size,
                    lo.z + (k as f64 + 0.5) * cell_size,
                );
                if mesh.contains(&center) {
                    occupied.insert((i, j, k));
                }
            }
        }
    }

    if occupied.len() < 8 {
        return Err(Error::ResolutionTooCoarse {
            occupied: occupied.len(),
        });
    }
    Ok(VoxelGrid {
        origin: lo,
        cell_size,
        occupied,
    })
}

/// Build the cell complex (cells + 6-connectivity adjacency) of a grid.
pub fn cell_complex(grid: &VoxelGrid) -> Result<CellComplex> {
    if grid.occupied.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let cs = grid.cell_size;
    let volume = cs.powi(3);
    let mut index: HashMap<(i32, i32, i32), u32> = HashMap::new();
    let mut cells = Vec::with_capacity(grid.occupied.len());
    for (idx, &coord) in grid.occupied.iter().enumerate() {
        index.insert(coord, idx as u32);
        let base = Point3::new(
            grid.origin.x + coord.0 as f64 * cs,
            grid.origin.y + coord.1 as f64 * cs,
            grid.origin.z + coord.2 as f64 * cs,
        );
        let mut corners = [Point3::origin(); 8];
        for (ci, corner) in corners.iter_mut().enumerate() {
            *corner = Point3::new(
                base.x + ((ci & 1) as f64) * cs,
                base.y + (((ci >> 1) & 1) as f64) * cs,
                base.z + (((ci >> 2) & 1) as f64) * cs,
            );
        }
        cells.push(Cell {
            centroid: grid.cell_center(coord),
            volume,
            corners,
            grid_coord: coord,
        });
    }
    let mut adjacency = Vec::new();
    for (&coord, &i) in index.iter() {
        for neigh in [
            (coord.0 + 1, coord.1, coord.2),
            (coord.0, coord.1 + 1, coord.2),
            (coord.0, coord.1, coord.2 + 1),
        ] {
            if let Some(&j) = index.get(&neigh) {
                adjacency.push((i.min(j), i.max(j)));
            }
        }
    }
    adjacency.sort_unstable();
    Ok(CellComplex {
        cells,
        adjacency,
        cell_size: cs,
    })
}

/// Triangle vs axis-aligned box overlap via the separating axis theorem.
///
/// The overlap is open: a triangle lying exactly in a cell's boundary plane
/// does not claim that cell. Without this, meshes whose faces land on grid
/// planes would grow a spurious one-cell skin on the empty side.
fn tri_box_overlap(center: &Point3, half: &Vec3, tri: &[Point3; 3]) -> bool {
    let eps = 1e-7 * half.x.max(half.y).max(half.z);
    let v0 = tri[0] - center;
    let v1 = tri[1] - center;
    let v2 = tri[2] - center;
    let e0 = v1 - v0;
    let e1 = v2 - v1;
    let e2 = v0 - v2;

    // box axes
    for k in 0..3 {
        let min = v0[k].min(v1[k]).min(v2[k]);
        let max = v0[k].max(v1[k]).max(v2[k]);
        if min >= half[k] - eps || max <= -half[k] + eps {
            return false;
        }
    }

    // 9 cross-product axes
    let edges = [e0, e1, e2];
    let verts = [v0, v1, v2];
    for e in &edges {
        for k in 0..3 {
            let mut axis = Vec3::zeros();
            match k {
                0 => {
                    axis.y = -e.z;
                    axis.z = e.y;
                }
                1 => {
                    axis.x = e.z;
                    axis.z = -e.x;
                }
                _ => {
                    axis.x = -e.y;
                    axis.y = e.x;
                }
            }
            let r = half.x * axis.x.abs() + half.y * axis.y.abs() + half.z * axis.z.abs();
            let mut pmin = f64::INFINITY;
            let mut pmax = f64::NEG_INFINITY;
            for v in &verts {
                let p = axis.dot(v);
                pmin = pmin.min(p);
                pmax = pmax.max(p);
            }
            if pmin > r || pmax < -r {
                return false;
            }
        }
    }

    // triangle plane
    let n = e0.cross(&e1);
    let d = -n.dot(&v0);
    let r = half.x * n.x.abs() + half.y * n.y.abs() + half.z * n.z.abs();
    (-d).abs() <= r
}
