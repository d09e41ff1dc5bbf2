//! Incremental quickhull-style 3D convex hull.
//!
//! Faces are triangles (coplanar facets are left as fans). Visibility tests
//! use a relative epsilon of 1e-12 times the bounding-box diagonal.

use std::collections::HashMap;

use super::{bounding_box, Point3, TriMesh, Vec3};
use crate::error::{Error, Result};

const EPS_REL: f64 = 1e-12;

struct Face {
    verts: [u32; 3],
    normal: Vec3,
    offset: f64,
    outside: Vec<u32>,
    alive: bool,
}

impl Face {
    fn dist(&self, p: &Point3) -> f64 {
        self.normal.dot(&p.coords) - self.offset
    }
}

struct HullBuilder<'a> {
    points: &'a [Point3],
    faces: Vec<Face>,
    // directed edge (a, b) -> face that owns it
    edge_owner: HashMap<(u32, u32), u32>,
    interior: Point3,
    eps: f64,
}

impl<'a> HullBuilder<'a> {
    fn make_face(&mut self, a: u32, b: u32, c: u32) -> u32 {
        let pa = self.points[a as usize];
        let pb = self.points[b as usize];
        let pc = self.points[c as usize];
        let mut verts = [a, b, c];
        let mut normal = (pb - pa).cross(&(pc - pa));
        let len = normal.norm();
        if len > 0.0 {
            normal /= len;
        }
        let centroid = (pa.coords + pb.coords + pc.coords) / 3.0;
        // orient away from the interior reference point
        if normal.dot(&(centroid - self.interior.coords)) < 0.0 {
            verts.swap(1, 2);
            normal = -normal;
        }
        let offset = normal.dot(&centroid);
        let id = self.faces.len() as u32;
        self.faces.push(Face {
            verts,
            normal,
            offset,
            outside: Vec::new(),
            alive: true,
        });
        for k in 0..3 {
            let e = (verts[k], verts[(k + 1) % 3]);
            self.edge_owner.insert(e, id);
        }
        id
    }

    fn kill_face(&mut self, id: u32) {
        let verts = self.faces[id as usize].verts;
        for k in 0..3 {
            let e = (verts[k], verts[(k + 1) % 3]);
            if self.edge_owner.get(&e) == Some(&id) {
                self.edge_owner.remove(&e);
            }
        }
        self.faces[id as usize].alive = false;
    }

    fn neighbor_across(&self, a: u32, b: u32) -> Option<u32> {
        self.edge_owner.get(&(b, a)).copied()
    }
}

/// Convex hull of a 3D point set.
///
/// Errors with [`Error::DegenerateInput`] when fewer than 4 points are given
/// or all points are coplanar/collinear. The result is a watertight triangle
/// mesh with outward winding whose vertices are a subset of the input points.
pub fn convex_hull(points: &[Point3]) -> Result<TriMesh> {
    if points.len() < 4 {
        return Err(Error::DegenerateInput);
    }
    let (lo, hi) = bounding_box(points);
    let diag = (hi - lo).norm();
    if diag <= 0.0 {
        return Err(Error::DegenerateInput);
    }
    let eps = EPS_REL.max(f64::EPSILON) * diag;

    // initial simplex: farthest pair among axis extremes, then the point
    // farthest from their line, then the point farthest from that plane
    let mut extremes = Vec::with_capacity(6);
    for axis in 0..3 {
        let mut imin = 0;
        let mut imax = 0;
        for (i, p) in points.iter().enumerate() {
            if p[axis] < points[imin][axis] {
                imin = i;
            }
            if p[axis] > points[imax][axis] {
                imax = i;
            }
        }
        extremes.push(imin);
        extremes.push(imax);
    }
    let (mut i0, mut i1) = (extremes[0], extremes[1]);
    let mut best = -1.0;
    for &a in &extremes {
        for &b in &extremes {
            let d = (points[a] - points[b]).norm_squared();
            if d > best {
                best = d;
                i0 = a;
                i1 = b;
            }
        }
    }
    if best.sqrt() <= eps {
        return Err(Error::DegenerateInput);
    }
    let dir = (points[i1] - points[i0]).normalize();
    let mut i2 = usize::MAX;
    let mut best = eps;
    for (i, p) in points.iter().enumerate() {
        let v = p - points[i0];
        let d = (v - dir * v.dot(&dir)).norm();
        if d > best {
            best = d;
            i2 = i;
        }
    }
    if i2 == usize::MAX {
        return Err(Error::DegenerateInput); // collinear
    }
    let n = (points[i1] - points[i0])
        .cross(&(points[i2] - points[i0]))
        .normalize();
    let mut i3 = usize::MAX;
    let mut best = eps;
    for (i, p) in points.iter().enumerate() {
        let d = n.dot(&(p - points[i0])).abs();
        if d > best {
            best = d;
            i3 = i;
        }
    }
    if i3 == usize::MAX {
        return Err(Error::DegenerateInput); // coplanar
    }

    let interior = Point3::from(
        (points[i0].coords + points[i1].coords + points[i2].coords + points[i3].coords) / 4.0,
    );
    let mut hb = HullBuilder {
        points,
        faces: Vec::new(),
        edge_owner: HashMap::new(),
        interior,
        eps,
    };
    let (a, b, c, d) = (i0 as u32, i1 as u32, i2 as u32, i3 as u32);
    hb.make_face(a, b, c);
    hb.make_face(a, b, d);
    hb.make_face(a, c, d);
    hb.make_face(b, c, d);

    // conflict lists
    for (i, p) in points.iter().enumerate() {
        let i = i as u32;
        if i == a || i == b || i == c || i == d {
            continue;
        }
        let mut best_f = None;
        let mut best_d = hb.eps;
        for (fi, face) in hb.faces.iter().enumerate() {
            let dist = face.dist(p);
            if dist > best_d {
                best_d = dist;
                best_f = Some(fi);
            }
        }
        if let Some(fi) = best_f {
            hb.faces[fi].outside.push(i);
        }
    }

    // refinement loop
    let max_iter = points.len() * 8 + 64;
    for _ in 0..max_iter {
        // face with the farthest outside point
        let mut seed = None;
        let mut far = hb.eps;
        let mut apex = 0u32;
        for (fi, face) in hb.faces.iter().enumerate() {
            if !face.alive {
                continue;
            }
            for &pi in &face.outside {
                let d = face.dist(&points[pi as usize]);
                if d > far {
                    far = d;
                    seed = Some(fi as u32);
                    apex = pi;
                }
            }
        }
        let Some(seed) = seed else { break };
        let apex_p = points[apex as usize];

        // visible region BFS
        let mut visible = vec![seed];
        let mut mark: HashMap<u32, bool> = HashMap::new();
        mark.insert(seed, true);
        let mut stack = vec![seed];
        while let Some(fi) = stack.pop() {
            let verts = hb.faces[fi as usize].verts;
            for k in 0..3 {
                let (u, v) = (verts[k], verts[(k + 1) % 3]);
                if let Some(nb) = hb.neighbor_across(u, v) {
                    if mark.contains_key(&nb) {
                        continue;
                    }
                    let vis = hb.faces[nb as usize].dist(&apex_p) > hb.eps;
                    mark.insert(nb, vis);
                    if vis {
                        visible.push(nb);
                        stack.push(nb);
                    }
                }
            }
        }

        // horizon: directed edges of visible faces whose neighbour is hidden
        let mut horizon = Vec::new();
        for &fi in &visible {
            let verts = hb.faces[fi as usize].verts;
            for k in 0..3 {
                let (u, v) = (verts[k], verts[(k + 1) % 3]);
                let hidden = match hb.neighbor_across(u, v) {
                    Some(nb) => !mark.get(&nb).copied().unwrap_or(false),
                    None => true,
                };
                if hidden {
                    horizon.push((u, v));
                }
            }
        }

        // orphaned conflict points
        let mut orphans = Vec::new();
        for &fi in &visible {
            orphans.append(&mut hb.faces[fi as usize].outside);
        }
        for &fi in &visible {
            hb.kill_face(fi);
        }

        let mut new_faces = Vec::with_capacity(horizon.len());
        for &(u, v) in &horizon {
            new_faces.push(hb.make_face(u, v, apex));
        }

        for pi in orphans {
            if pi == apex {
                continue;
            }
            let p = points[pi as usize];
            let mut best_f = None;
            let mut best_d = hb.eps;
            for &fi in &new_faces {
                let d = hb.faces[fi as usize].dist(&p);
                if d > best_d {
                    best_d = d;
                    best_f = Some(fi);
                }
            }
            if let Some(fi) = best_f {
                hb.faces[fi as usize].outside.push(pi);
            }
        }
    }

    // compact to a TriMesh
    let mut remap: HashMap<u32, u32> = HashMap::new();
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    let mut face_ids: Vec<u32> = hb
        .faces
        .iter()
        .enumerate()
        .filter(|(_, f)| f.alive)
        .map(|(i, _)| i as u32)
        .collect();
    face_ids.sort_unstable();
    for fi in face_ids {
        let vs = hb.faces[fi as usize].verts;
        let mut tri = [0u32; 3];
        for (k, &vi) in vs.iter().enumerate() {
            let next = remap.len() as u32;
            let id = *remap.entry(vi).or_insert_with(|| {
                vertices.push(points[vi as usize]);
                next
            });
            tri[k] = id;
        }
        faces.push(tri);
    }
    TriMesh::new(vertices, faces)
}

/// Volume enclosed by a watertight mesh (positive).
///
/// Named for its main use: the convex-hull volume operand of the merge cost.
pub fn hull_volume(mesh: &TriMesh) -> Result<f64> {
    mesh.enclosed_volume()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tetra_points() -> Vec<Point3> {
        vec![
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(0.0, 1.0, 0.0),
            Point3::new(0.0, 0.0, 1.0),
        ]
    }

    /// Brute-force check: p lies inside or on every face half-space.
    fn inside_hull(mesh: &TriMesh, p: &Point3, tol: f64) -> bool {
        (0..mesh.faces().len()).all(|i| {
            let [a, _, _] = mesh.face_points(i);
            let n = mesh.face_normal(i);
            n.dot(&(p - a)) <= tol
        })
    }

    #[test]
    fn tetrahedron_is_its_own_hull() {
        let hull = convex_hull(&tetra_points()).unwrap();
        assert_eq!(hull.vertices().len(), 4);
        assert_eq!(hull.faces().len(), 4);
        assert!(hull.is_watertight());
        assert!((hull_volume(&hull).unwrap() - 1.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn interior_point_is_excluded() {
        let mut pts = vec![
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(1.0, 1.0, 0.0),
            Point3::new(0.0, 1.0, 0.0),
            Point3::new(0.0, 0.0, 1.0),
            Point3::new(1.0, 0.0, 1.0),
            Point3::new(1.0, 1.0, 1.0),
            Point3::new(0.0, 1.0, 1.0),
        ];
        pts.push(Point3::new(0.5, 0.5, 0.5));
        let hull = convex_hull(&pts).unwrap();
        assert_eq!(hull.vertices().len(), 8);
        assert!((hull_volume(&hull).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn random_ball_points_all_contained() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut pts = Vec::new();
        while pts.len() < 200 {
            let v = Vec3::new(
                rng.random::<f64>() * 2.0 - 1.0,
                rng.random::<f64>() * 2.0 - 1.0,
                rng.random::<f64>() * 2.0 - 1.0,
            );
            if v.norm() <= 1.0 {
                pts.push(Point3::from(v));
            }
        }
        let hull = convex_hull(&pts).unwrap();
        assert!(hull.is_watertight());
        let tol = 1e-9 * hull.bbox_diagonal();
        for p in &pts {
            assert!(inside_hull(&hull, p, tol), "point {p:?} escaped the hull");
        }
    }

    #[test]
    fn hull_idempotence() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let pts: Vec<Point3> = (0..120)
            .map(|_| Point3::new(rng.random(), rng.random(), rng.random()))
            .collect();
        let hull = convex_hull(&pts).unwrap();
        let again = convex_hull(hull.vertices()).unwrap();
        let mut a: Vec<_> = hull
            .vertices()
            .iter()
            .map(|p| (p.x.to_bits(), p.y.to_bits(), p.z.to_bits()))
            .collect();
        let mut b: Vec<_> = again
            .vertices()
            .iter()
            .map(|p| (p.x.to_bits(), p.y.to_bits(), p.z.to_bits()))
            .collect();
        a.sort_unstable();
        b.sort_unstable();
        assert_eq!(a, b);
    }

    #[test]
    fn degenerate_inputs_rejected() {
        assert!(matches!(
            convex_hull(&tetra_points()[..3]),
            Err(Error::DegenerateInput)
        ));
        // coplanar grid
        let flat: Vec<Point3> = (0..25)
            .map(|i| Point3::new((i % 5) as f64, (i / 5) as f64, 0.0))
            .collect();
        assert!(matches!(convex_hull(&flat), Err(Error::DegenerateInput)));
        // collinear
        let line: Vec<Point3> = (0..10).map(|i| Point3::new(i as f64, 0.0, 0.0)).collect();
        assert!(matches!(convex_hull(&line), Err(Error::DegenerateInput)));
    }

    #[test]
    fn monte_carlo_volume_of_random_hull() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let pts: Vec<Point3> = (0..100)
            .map(|_| Point3::new(rng.random(), rng.random(), rng.random()))
            .collect();
        let hull = convex_hull(&pts).unwrap();
        let vol = hull_volume(&hull).unwrap();
        // Monte-Carlo containment estimate over the unit cube
        let n = 1_000_000usize;
        let mut hits = 0usize;
        let planes: Vec<(Vec3, f64)> = (0..hull.faces().len())
            .map(|i| {
                let n = hull.face_normal(i);
                let [a, _, _] = hull.face_points(i);
                (n, n.dot(&a.coords))
            })
            .collect();
        for _ in 0..n {
            let p = Vec3::new(rng.random(), rng.random(), rng.random());
            if planes.iter().all(|(nrm, off)| nrm.dot(&p) <= *off) {
                hits += 1;
            }
        }
        let est = hits as f64 / n as f64; // cube volume is 1
        assert!(
            (vol - est).abs() / est < 0.01,
            "hull volume {vol} vs MC {est}"
        );
    }

    #[test]
    fn volume_monotone_under_union() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..20 {
            let pa: Vec<Point3> = (0..30)
                .map(|_| Point3::new(rng.random(), rng.random(), rng.random()))
                .collect();
            let pb: Vec<Point3> = (0..30)
                .map(|_| Point3::new(rng.random(), rng.random(), rng.random()))
                .collect();
            let va = hull_volume(&convex_hull(&pa).unwrap()).unwrap();
            let vb = hull_volume(&convex_hull(&pb).unwrap()).unwrap();
            let mut pu = pa.clone();
            pu.extend_from_slice(&pb);
            let vu = hull_volume(&convex_hull(&pu).unwrap()).unwrap();
            assert!(vu >= va.max(vb) - 1e-12);
        }
    }
}
