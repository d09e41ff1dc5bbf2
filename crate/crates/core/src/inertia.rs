//! Point-mass discretized inertial parameters, frame transforms, composition
//! across parts, and the physical-consistency test.
//!
//! Inertia tensors are always taken about the origin of the annotated frame,
//! which is what the pseudoinertia construction expects. The six unique
//! entries are stored half-vectorized in row-major upper-triangle order
//! (Ixx, Ixy, Ixz, Iyy, Iyz, Izz).

use nalgebra::{Matrix3, Matrix4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{Point3, Vec3};

/// Eigenvalue slack used by [`is_consistent`]: rounding noise, not physics.
pub const CONSISTENCY_TOL: f64 = 1e-10;

/// Rigid transform: rotation plus translation, mapping points of the local
/// frame into the parent frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    #[serde(with = "serde_rot", rename = "R")]
    pub rotation: Matrix3<f64>,
    #[serde(with = "serde_vec", rename = "p")]
    pub translation: Vec3,
}

impl Pose {
    pub fn new(rotation: Matrix3<f64>, translation: Vec3) -> Result<Self> {
        let rtr = rotation.transpose() * rotation;
        if (rtr - Matrix3::identity()).abs().max() > 1e-9 {
            return Err(Error::InvalidPose);
        }
        if (rotation.determinant() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidPose);
        }
        Ok(Self {
            rotation,
            translation,
        })
    }

    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vec3::zeros(),
        }
    }

    pub fn transform_point(&self, p: &Point3) -> Point3 {
        Point3::from(self.rotation * p.coords + self.translation)
    }

    pub fn inverse(&self) -> Pose {
        let rt = self.rotation.transpose();
        Pose {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    /// self ∘ other: apply `other`, then `self`.
    pub fn compose(&self, other: &Pose) -> Pose {
        Pose {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }
}

mod serde_rot {
    use nalgebra::Matrix3;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &Matrix3<f64>, s: S) -> Result<S::Ok, S::Error> {
        let row_major: Vec<f64> = (0..3).flat_map(|i| (0..3).map(move |j| m[(i, j)])).collect();
        row_major.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Matrix3<f64>, D::Error> {
        let v = Vec::<f64>::deserialize(d)?;
        if v.len() != 9 {
            return Err(serde::de::Error::custom("rotation needs 9 entries"));
        }
        Ok(Matrix3::from_row_slice(&v))
    }
}

mod serde_vec {
    use nalgebra::Vector3;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &Vector3<f64>, s: S) -> Result<S::Ok, S::Error> {
        [v.x, v.y, v.z].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vector3<f64>, D::Error> {
        let v = <[f64; 3]>::deserialize(d)?;
        Ok(Vector3::new(v[0], v[1], v[2]))
    }
}

/// Point masses sampled over one part, positions in the object frame.
#[derive(Debug, Clone)]
pub struct PartPoints {
    pub positions: Vec<Point3>,
    pub part_id: usize,
}

impl PartPoints {
    pub fn new(positions: Vec<Point3>, part_id: usize) -> Result<Self> {
        if positions.is_empty() {
            return Err(Error::EmptyPart);
        }
        Ok(Self { positions, part_id })
    }
}

/// The ten inertial parameters with a frame annotation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InertialParams {
    pub mass: f64,
    /// Centre of mass in the annotated frame, metres.
    pub com: [f64; 3],
    /// Inertia tensor about the frame origin, vech order
    /// (Ixx, Ixy, Ixz, Iyy, Iyz, Izz), kg m^2.
    pub inertia_vech: [f64; 6],
    pub frame: String,
}

impl InertialParams {
    pub fn new(mass: f64, com: Point3, inertia: &Matrix3<f64>, frame: impl Into<String>) -> Self {
        Self {
            mass,
            com: [com.x, com.y, com.z],
            inertia_vech: vech(inertia),
            frame: frame.into(),
        }
    }

    pub fn zero(frame: impl Into<String>) -> Self {
        Self {
            mass: 0.0,
            com: [0.0; 3],
            inertia_vech: [0.0; 6],
            frame: frame.into(),
        }
    }

    pub fn com_point(&self) -> Point3 {
        Point3::new(self.com[0], self.com[1], self.com[2])
    }

    pub fn inertia_matrix(&self) -> Matrix3<f64> {
        unvech(&self.inertia_vech)
    }

    /// Same body described in the parent frame of `pose` (pose maps this
    /// frame into the parent frame). The inertia stays about the respective
    /// frame origin, so the parallel-axis terms move accordingly.
    pub fn transformed(&self, pose: &Pose, new_frame: impl Into<String>) -> InertialParams {
        let m = self.mass;
        let c_old = self.com_point().coords;
        let i_old = self.inertia_matrix();
        // inertia about the old centre of mass
        let i_com = i_old + m * skew_sq(&c_old);
        let c_new = pose.rotation * c_old + pose.translation;
        let i_new = pose.rotation * i_com * pose.rotation.transpose() - m * skew_sq(&c_new);
        InertialParams::new(m, Point3::from(c_new), &i_new, new_frame)
    }
}

/// vech of a symmetric 3x3 matrix: row-major upper triangle.
pub fn vech(m: &Matrix3<f64>) -> [f64; 6] {
    [
        m[(0, 0)],
        m[(0, 1)],
        m[(0, 2)],
        m[(1, 1)],
        m[(1, 2)],
        m[(2, 2)],
    ]
}

/// Symmetric 3x3 matrix from its row-major upper triangle.
pub fn unvech(v: &[f64; 6]) -> Matrix3<f64> {
    Matrix3::new(v[0], v[1], v[2], v[1], v[3], v[4], v[2], v[4], v[5])
}

/// Skew-symmetric matrix `[u]x` with `[u]x v = u x v`.
pub fn skew(u: &Vec3) -> Matrix3<f64> {
    Matrix3::new(0.0, -u.z, u.y, u.z, 0.0, -u.x, -u.y, u.x, 0.0)
}

/// [u]x [u]x, the building block of point inertias and parallel-axis terms.
fn skew_sq(u: &Vec3) -> Matrix3<f64> {
    let s = skew(u);
    s * s
}

/// Centroid of a part's point masses. For a homogeneous part this is the
/// centre of mass.
pub fn centroid(points: &PartPoints) -> Point3 {
    let mut sum = Vec3::zeros();
    for p in &points.positions {
        sum += p.coords;
    }
    Point3::from(sum / points.positions.len() as f64)
}

/// Inertia tensor of a point mass at `p` about the frame origin:
/// `-m [p]x [p]x = m (||p||^2 I - p p^T)`.
pub fn point_inertia(p: &Point3, mass: f64) -> Matrix3<f64> {
    -mass * skew_sq(&p.coords)
}

/// Inertial parameters of a homogeneous part in the sensor frame.
///
/// `pose` maps object-frame coordinates into the sensor frame. The point
/// masses carry uniform weight mass/n; the second-moment sum is taken about
/// the part centroid and the parallel-axis term then moves it to the sensor
/// origin.
pub fn part_params_sensor(points: &PartPoints, mass: f64, pose: &Pose) -> Result<InertialParams> {
    part_params_sensor_weighted(points, None, mass, pose)
}

/// Like [`part_params_sensor`] with explicit per-point weights (they are
/// normalized internally). Uniform weights reproduce the plain version.
pub fn part_params_sensor_weighted(
    points: &PartPoints,
    weights: Option<&[f64]>,
    mass: f64,
    pose: &Pose,
) -> Result<InertialParams> {
    if mass < 0.0 {
        return Err(Error::InvalidParameter("mass must be >= 0".into()));
    }
    let n = points.positions.len();
    if let Some(w) = weights {
        if w.len() != n {
            return Err(Error::ShapeMismatch(format!(
                "{} weights for {} points",
                w.len(),
                n
            )));
        }
    }
    let wsum: f64 = match weights {
        Some(w) => w.iter().sum(),
        None => n as f64,
    };
    if wsum <= 0.0 {
        return Err(Error::EmptyPart);
    }
    let weight = |i: usize| weights.map_or(1.0, |w| w[i]) / wsum;

    let mut c_b = Vec3::zeros();
    for (i, p) in points.positions.iter().enumerate() {
        c_b += weight(i) * p.coords;
    }
    // unit second moment about the part centroid
    let mut unit_inertia = Matrix3::zeros();
    for (i, p) in points.positions.iter().enumerate() {
        unit_inertia -= weight(i) * skew_sq(&(p.coords - c_b));
    }
    let c_s = pose.rotation * c_b + pose.translation;
    let inertia =
        mass * (pose.rotation * unit_inertia * pose.rotation.transpose() - skew_sq(&c_s));
    Ok(InertialParams::new(
        mass,
        Point3::from(c_s),
        &inertia,
        "sensor",
    ))
}

/// Sum the inertial parameters of several parts described in one frame.
pub fn compose(parts: &[InertialParams]) -> Result<InertialParams> {
    let first = parts.first().ok_or(Error::EmptyPart)?;
    for p in parts.iter().skip(1) {
        if p.frame != first.frame {
            return Err(Error::FrameMismatch {
                a: first.frame.clone(),
                b: p.frame.clone(),
            });
        }
    }
    let mass: f64 = parts.iter().map(|p| p.mass).sum();
    if mass <= 0.0 {
        return Err(Error::ZeroTotalMass);
    }
    let mut moment = Vec3::zeros();
    let mut inertia = [0.0; 6];
    for p in parts {
        moment += p.mass * p.com_point().coords;
        for (total, v) in inertia.iter_mut().zip(p.inertia_vech.iter()) {
            *total += v;
        }
    }
    Ok(InertialParams {
        mass,
        com: [(moment.x / mass), (moment.y / mass), (moment.z / mass)],
        inertia_vech: inertia,
        frame: first.frame.clone(),
    })
}

/// The 4x4 pseudoinertia matrix P = [[tr(I)/2 E - I, m c], [m c^T, m]].
pub fn pseudoinertia(params: &InertialParams) -> Matrix4<f64> {
    let i = params.inertia_matrix();
    let sigma = Matrix3::identity() * (i.trace() / 2.0) - i;
    let h = params.mass * params.com_point().coords;
    let mut p = Matrix4::zeros();
    p.fixed_view_mut::<3, 3>(0, 0).copy_from(&sigma);
    p.fixed_view_mut::<3, 1>(0, 3).copy_from(&h);
    p.fixed_view_mut::<1, 3>(3, 0).copy_from(&h.transpose());
    p[(3, 3)] = params.mass;
    p
}

/// Physical consistency: positive mass and a pseudoinertia matrix that is
/// positive-definite up to rounding.
pub fn is_consistent(params: &InertialParams) -> bool {
    if params.mass <= 0.0 || params.mass.is_nan() {
        return false;
    }
    let p = pseudoinertia(params);
    let eig = nalgebra::SymmetricEigen::new(p);
    eig.eigenvalues.iter().all(|&l| l > -CONSISTENCY_TOL)
}
