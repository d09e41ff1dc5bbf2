//! Stop-and-go trajectory generation, noiseless wrench simulation, and the
//! sensor noise model.

use nalgebra::{Matrix3, Rotation3, Unit};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{Point3, Vec3};
use crate::identify::{WrenchSample, GRAVITY};
use crate::inertia::{InertialParams, Pose};

/// Key poses of the sensor frame in the world, with dwell/transit timing.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrajectorySpec {
    /// Sensor frame in the world at each dwell.
    pub poses: Vec<Pose>,
    /// Dwell duration at each pose, seconds.
    pub dwell: f64,
    /// Transit duration between consecutive poses, seconds.
    pub transit: f64,
    pub sample_rate: f64,
    /// Peak height of the vertical arc travelled during transits, metres.
    pub transit_bump: f64,
}

/// Rotation taking unit vector `from` to unit vector `to`.
fn rotation_between(from: &Vec3, to: &Vec3) -> Matrix3<f64> {
    let f = from.normalize();
    let t = to.normalize();
    let c = f.dot(&t);
    if c > 1.0 - 1e-12 {
        return Matrix3::identity();
    }
    if c < -1.0 + 1e-12 {
        // pick any axis orthogonal to f
        let axis = if f.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
        let ortho = (axis - f * f.dot(&axis)).normalize();
        return Rotation3::from_axis_angle(&Unit::new_normalize(ortho), std::f64::consts::PI)
            .into_inner();
    }
    let axis = Unit::new_normalize(f.cross(&t));
    Rotation3::from_axis_angle(&axis, c.acos()).into_inner()
}

/// Build the classic stop-and-go pose tour: for each of the first `n_axes`
/// sensor axes, one pose with gravity along the +axis and one along the
/// -axis, joined by smooth transits.
pub fn gen_stop_and_go(n_axes: usize) -> TrajectorySpec {
    assert!((1..=3).contains(&n_axes), "n_axes must be 1..=3");
    let g_world = Vec3::new(0.0, 0.0, -1.0);
    let mut poses = Vec::new();
    for axis in 0..n_axes {
        for sign in [-1.0, 1.0] {
            // desired gravity direction in the sensor frame
            let mut g_s = Vec3::zeros();
            g_s[axis] = sign;
            // world rotation R with R g_s = g_world, i.e. g_s = R^T g_world
            let rotation = rotation_between(&g_s, &g_world);
            // spread dwell positions on a small horizontal circle
            let k = poses.len() as f64;
            let translation = Vec3::new(
                0.06 * (k * 1.1).cos(),
                0.06 * (k * 1.7).sin(),
                0.40 + 0.02 * k,
            );
            poses.push(Pose {
                rotation,
                translation,
            });
        }
    }
    TrajectorySpec {
        poses,
        dwell: 2.0,
        transit: 1.5,
        sample_rate: 100.0,
        transit_bump: 0.10,
    }
}

/// Simulation output: samples plus the per-sample world pose of the sensor
/// and the dwell/transit ground truth.
#[derive(Debug, Clone)]
pub struct SimRecord {
    pub samples: Vec<WrenchSample>,
    pub world_poses: Vec<Pose>,
    pub dwell_mask: Vec<bool>,
}

/// Quintic smoothstep and its first two derivatives (zero velocity and
/// acceleration at both ends).
fn smoothstep5(tau: f64) -> (f64, f64, f64) {
    let t = tau.clamp(0.0, 1.0);
    let s = t * t * t * (10.0 - 15.0 * t + 6.0 * t * t);
    let ds = 30.0 * t * t * (1.0 - 2.0 * t + t * t);
    let dds = 60.0 * t * (1.0 - 3.0 * t + 2.0 * t * t);
    (s, ds, dds)
}

struct KinSample {
    rotation: Matrix3<f64>, // sensor -> world
    position: Point3,
    omega_s: Vec3,
    alpha_s: Vec3,
    acc_world: Vec3,
    dwelling: bool,
}

fn kinematics_at(traj: &TrajectorySpec, t: f64) -> KinSample {
    let n = traj.poses.len();
    let seg = traj.dwell + traj.transit;
    // segment index: pose k dwell occupies [k*seg, k*seg + dwell)
    let k = ((t / seg).floor() as usize).min(n - 1);
    let local = t - k as f64 * seg;
    let last = k + 1 >= n;
    if local < traj.dwell || last {
        let pose = &traj.poses[k];
        return KinSample {
            rotation: pose.rotation,
            position: Point3::from(pose.translation),
            omega_s: Vec3::zeros(),
            alpha_s: Vec3::zeros(),
            acc_world: Vec3::zeros(),
            dwelling: true,
        };
    }
    // transit from pose k to pose k+1
    let tau = (local - traj.dwell) / traj.transit;
    let (s, ds, dds) = smoothstep5(tau);
    let inv_t = 1.0 / traj.transit;
    let from = &traj.poses[k];
    let to = &traj.poses[k + 1];

    let rel = from.rotation.transpose() * to.rotation;
    // quaternion extraction stays well-defined at a half-turn, where the
    // skew part of the matrix (and with it Rotation3::axis) vanishes
    let q = nalgebra::UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(rel));
    let (axis, angle) = q
        .axis_angle()
        .map(|(a, th)| (a.into_inner(), th))
        .unwrap_or((Vec3::x(), 0.0));
    let theta = angle * s;
    let dtheta = angle * ds * inv_t;
    let ddtheta = angle * dds * inv_t * inv_t;
    let rotation = from.rotation
        * Rotation3::from_axis_angle(&Unit::new_normalize(axis), theta).into_inner();

    let dp = to.translation - from.translation;
    let bump = traj.transit_bump;
    // vertical arc 4 h s (1 - s) stacked on the linear blend
    let position = from.translation + dp * s + Vec3::z() * (4.0 * bump * s * (1.0 - s));
    let d_pos_ds = dp + Vec3::z() * (4.0 * bump * (1.0 - 2.0 * s));
    let acc_world = d_pos_ds * dds * inv_t * inv_t
        + Vec3::z() * (-8.0 * bump * (ds * inv_t) * (ds * inv_t));

    KinSample {
        rotation,
        position: Point3::from(position),
        omega_s: axis * dtheta,
        alpha_s: axis * ddtheta,
        acc_world,
        dwelling: false,
    }
}

/// Simulate the measured wrench of a rigid body with sensor-frame parameters
/// `params` along the trajectory. The measured convention reads m g at rest.
pub fn simulate_wrench(params: &InertialParams, traj: &TrajectorySpec, rate: f64) -> SimRecord {
    let n_poses = traj.poses.len();
    let total = n_poses as f64 * traj.dwell + (n_poses - 1) as f64 * traj.transit;
    let n_samples = (total * rate).floor() as usize + 1;

    let mass = params.mass;
    let mc = mass * params.com_point().coords;
    let inertia = params.inertia_matrix();
    let g_world = Vec3::new(0.0, 0.0, -GRAVITY);

    let mut samples = Vec::with_capacity(n_samples);
    let mut world_poses = Vec::with_capacity(n_samples);
    let mut dwell_mask = Vec::with_capacity(n_samples);
    for i in 0..n_samples {
        let t = i as f64 / rate;
        let kin = kinematics_at(traj, t);
        let g_s = kin.rotation.transpose() * g_world;
        let a_s = kin.rotation.transpose() * kin.acc_world;
        let w = kin.omega_s;
        let al = kin.alpha_s;

        let g_minus_a = g_s - a_s;
        let force = mass * g_minus_a - al.cross(&mc) - w.cross(&w.cross(&mc));
        let torque = mc.cross(&g_minus_a) - inertia * al - w.cross(&(inertia * w));

        samples.push(WrenchSample {
            t,
            force,
            torque,
            gravity_s: g_s,
            lin_acc: a_s,
            ang_acc: al,
            ang_vel: w,
            part_centroids_s: Vec::new(),
        });
        world_poses.push(Pose {
            rotation: kin.rotation,
            translation: kin.position.coords,
        });
        dwell_mask.push(kin.dwelling);
    }
    SimRecord {
        samples,
        world_poses,
        dwell_mask,
    }
}

/// Zero-mean Gaussian sensor noise (standard deviations per channel).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NoiseModel {
    pub sigma_ang_acc: f64,
    pub sigma_lin_acc: f64,
    pub sigma_force: f64,
    pub sigma_torque: f64,
    pub seed: u64,
}

impl NoiseModel {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn is_zero(&self) -> bool {
        self.sigma_ang_acc == 0.0
            && self.sigma_lin_acc == 0.0
            && self.sigma_force == 0.0
            && self.sigma_torque == 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseLevel {
    None,
    Low,
    Moderate,
    High,
}

impl std::str::FromStr for NoiseLevel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(NoiseLevel::None),
            "low" => Ok(NoiseLevel::Low),
            "moderate" => Ok(NoiseLevel::Moderate),
            "high" => Ok(NoiseLevel::High),
            other => Err(Error::InvalidParameter(format!(
                "unknown noise level '{other}'"
            ))),
        }
    }
}

impl std::fmt::Display for NoiseLevel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            NoiseLevel::None => "none",
            NoiseLevel::Low => "low",
            NoiseLevel::Moderate => "moderate",
            NoiseLevel::High => "high",
        })
    }
}

/// Noise presets for a wrist-mounted force-torque sensor
/// (ang. acc rad/s^2, lin. acc m/s^2, force N, torque N m).
pub fn preset_noise(level: NoiseLevel) -> NoiseModel {
    let (sa, sl, sf, st) = match level {
        NoiseLevel::None => (0.0, 0.0, 0.0, 0.0),
        NoiseLevel::Low => (0.25, 0.025, 0.05, 0.0025),
        NoiseLevel::Moderate => (0.5, 0.05, 0.1, 0.005),
        NoiseLevel::High => (1.0, 0.1, 0.33, 0.0067),
    };
    NoiseModel {
        sigma_ang_acc: sa,
        sigma_lin_acc: sl,
        sigma_force: sf,
        sigma_torque: st,
        seed: 0,
    }
}

/// Add i.i.d. zero-mean Gaussian noise per axis to the acceleration and
/// wrench channels. Gravity stays exact. Deterministic per seed.
pub fn add_noise(samples: &[WrenchSample], model: &NoiseModel) -> Vec<WrenchSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(model.seed);
    let draw = |sigma: f64, rng: &mut ChaCha8Rng| -> Vec3 {
        if sigma == 0.0 {
            return Vec3::zeros();
        }
        let dist = Normal::new(0.0, sigma).expect("sigma >= 0");
        Vec3::new(dist.sample(rng), dist.sample(rng), dist.sample(rng))
    };
    samples
        .iter()
        .map(|s| {
            let mut out = s.clone();
            out.ang_acc += draw(model.sigma_ang_acc, &mut rng);
            out.lin_acc += draw(model.sigma_lin_acc, &mut rng);
            out.force += draw(model.sigma_force, &mut rng);
            out.torque += draw(model.sigma_torque, &mut rng);
            out
        })
        .collect()
}
