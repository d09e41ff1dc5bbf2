//! Solid primitives: meshes, closed-form volumes and inertias, containment,
//! and interior sampling.

use nalgebra::Matrix3;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::geom::{Point3, TriMesh, Vec3};

/// Primitive solid shape in its canonical frame (centred at the origin,
/// cylinder axis along z).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Shape {
    Box { extents: [f64; 3] },
    Cylinder { radius: f64, height: f64 },
    Sphere { radius: f64 },
}

impl Shape {
    pub fn volume(&self) -> f64 {
        match self {
            Shape::Box { extents } => extents[0] * extents[1] * extents[2],
            Shape::Cylinder { radius, height } => std::f64::consts::PI * radius * radius * height,
            Shape::Sphere { radius } => 4.0 / 3.0 * std::f64::consts::PI * radius.powi(3),
        }
    }

    /// Inertia tensor about the shape's centre of mass for the given mass,
    /// in the canonical frame.
    pub fn unit_inertia(&self, mass: f64) -> Matrix3<f64> {
        match self {
            Shape::Box { extents } => {
                let [a, b, c] = *extents;
                Matrix3::from_diagonal(&Vec3::new(
                    mass * (b * b + c * c) / 12.0,
                    mass * (a * a + c * c) / 12.0,
                    mass * (a * a + b * b) / 12.0,
                ))
            }
            Shape::Cylinder { radius, height } => {
                let r2 = radius * radius;
                let h2 = height * height;
                Matrix3::from_diagonal(&Vec3::new(
                    mass * (3.0 * r2 + h2) / 12.0,
                    mass * (3.0 * r2 + h2) / 12.0,
                    mass * r2 / 2.0,
                ))
            }
            Shape::Sphere { radius } => {
                Matrix3::identity() * (0.4 * mass * radius * radius)
            }
        }
    }

    /// True when `p` (canonical frame) is at signed distance < `margin` from
    /// the solid; margin 0 is inside-or-on, negative margins demand strict
    /// interiority.
    pub fn contains_local(&self, p: &Point3, margin: f64) -> bool {
        match self {
            Shape::Box { extents } => (0..3).all(|k| p[k].abs() <= extents[k] * 0.5 + margin),
            Shape::Cylinder { radius, height } => {
                (p.x * p.x + p.y * p.y).sqrt() <= radius + margin
                    && p.z.abs() <= height * 0.5 + margin
            }
            Shape::Sphere { radius } => p.coords.norm() <= radius + margin,
        }
    }

    /// Canonical-frame axis-aligned bounding box.
    pub fn local_bbox(&self) -> (Point3, Point3) {
        let half = match self {
            Shape::Box { extents } => Vec3::new(extents[0], extents[1], extents[2]) * 0.5,
            Shape::Cylinder { radius, height } => Vec3::new(*radius, *radius, height * 0.5),
            Shape::Sphere { radius } => Vec3::repeat(*radius),
        };
        (Point3::from(-half), Point3::from(half))
    }

    /// Uniform interior sample in the canonical frame.
    pub fn sample_interior<R: Rng>(&self, rng: &mut R) -> Point3 {
        match self {
            Shape::Box { extents } => Point3::new(
                (rng.random::<f64>() - 0.5) * extents[0],
                (rng.random::<f64>() - 0.5) * extents[1],
                (rng.random::<f64>() - 0.5) * extents[2],
            ),
            Shape::Cylinder { radius, height } => {
                let r = radius * rng.random::<f64>().sqrt();
                let th = rng.random::<f64>() * std::f64::consts::TAU;
                Point3::new(
                    r * th.cos(),
                    r * th.sin(),
                    (rng.random::<f64>() - 0.5) * height,
                )
            }
            Shape::Sphere { radius } => loop {
                let v = Vec3::new(
                    rng.random::<f64>() * 2.0 - 1.0,
                    rng.random::<f64>() * 2.0 - 1.0,
                    rng.random::<f64>() * 2.0 - 1.0,
                );
                if v.norm_squared() <= 1.0 {
                    return Point3::from(v * *radius);
                }
            },
        }
    }

    pub fn mesh(&self) -> TriMesh {
        match self {
            Shape::Box { extents } => box_mesh(&Vec3::new(extents[0], extents[1], extents[2])),
            Shape::Cylinder { radius, height } => cylinder_mesh(*radius, *height, 32),
            Shape::Sphere { radius } => sphere_mesh(*radius, 16, 32),
        }
    }
}

/// Axis-aligned box centred at the origin.
pub fn box_mesh(extents: &Vec3) -> TriMesh {
    let h = extents * 0.5;
    let v = vec![
        Point3::new(-h.x, -h.y, -h.z),
        Point3::new(h.x, -h.y, -h.z),
        Point3::new(h.x, h.y, -h.z),
        Point3::new(-h.x, h.y, -h.z),
        Point3::new(-h.x, -h.y, h.z),
        Point3::new(h.x, -h.y, h.z),
        Point3::new(h.x, h.y, h.z),
        Point3::new(-h.x, h.y, h.z),
    ];
    let f = vec![
        [0, 2, 1],
        [0, 3, 2],
        [4, 5, 6],
        [4, 6, 7],
        [0, 1, 5],
        [0, 5, 4],
        [2, 3, 7],
        [2, 7, 6],
        [1, 2, 6],
        [1, 6, 5],
        [0, 4, 7],
        [0, 7, 3],
    ];
    TriMesh::new(v, f).expect("box mesh is valid")
}

/// Closed cylinder along z, centred at the origin.
pub fn cylinder_mesh(radius: f64, height: f64, segments: usize) -> TriMesh {
    let n = segments.max(3);
    let hz = height * 0.5;
    let mut v = Vec::with_capacity(2 * n + 2);
    for ring in [-hz, hz] {
        for s in 0..n {
            let th = s as f64 / n as f64 * std::f64::consts::TAU;
            v.push(Point3::new(radius * th.cos(), radius * th.sin(), ring));
        }
    }
    let bottom_center = v.len() as u32;
    v.push(Point3::new(0.0, 0.0, -hz));
    let top_center = v.len() as u32;
    v.push(Point3::new(0.0, 0.0, hz));

    let mut f = Vec::with_capacity(4 * n);
    let nu = n as u32;
    for s in 0..nu {
        let s1 = (s + 1) % nu;
        // side quad (bottom ring s..s1, top ring s..s1), outward
        f.push([s, s1, nu + s1]);
        f.push([s, nu + s1, nu + s]);
        // bottom cap (normal -z)
        f.push([bottom_center, s1, s]);
        // top cap (normal +z)
        f.push([top_center, nu + s, nu + s1]);
    }
    TriMesh::new(v, f).expect("cylinder mesh is valid")
}

/// UV sphere centred at the origin.
pub fn sphere_mesh(radius: f64, rings: usize, segments: usize) -> TriMesh {
    let rings = rings.max(3);
    let segs = segments.max(3);
    let mut v = Vec::new();
    v.push(Point3::new(0.0, 0.0, radius)); // north pole: 0
    for r in 1..rings {
        let phi = std::f64::consts::PI * r as f64 / rings as f64;
        for s in 0..segs {
            let th = std::f64::consts::TAU * s as f64 / segs as f64;
            v.push(Point3::new(
                radius * phi.sin() * th.cos(),
                radius * phi.sin() * th.sin(),
                radius * phi.cos(),
            ));
        }
    }
    let south = v.len() as u32;
    v.push(Point3::new(0.0, 0.0, -radius));

    let ring_start = |r: usize| 1 + (r - 1) * segs;
    let mut f = Vec::new();
    let su = segs as u32;
    // pole fans
    for s in 0..su {
        let s1 = (s + 1) % su;
        f.push([0, ring_start(1) as u32 + s, ring_start(1) as u32 + s1]);
        let last = ring_start(rings - 1) as u32;
        f.push([south, last + s1, last + s]);
    }
    // quads between rings
    for r in 1..rings - 1 {
        let a = ring_start(r) as u32;
        let b = ring_start(r + 1) as u32;
        for s in 0..su {
            let s1 = (s + 1) % su;
            f.push([a + s, b + s, b + s1]);
            f.push([a + s, b + s1, a + s1]);
        }
    }
    TriMesh::new(v, f).expect("sphere mesh is valid")
}
