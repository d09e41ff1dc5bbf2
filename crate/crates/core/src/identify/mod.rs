//! Inertial parameter identification from wrench data.
//!
//! Two estimators are provided. The part-mass estimator builds the
//! quasi-static wrench regressor over up to four part masses from stalled
//! stop-and-go samples and solves it with nonnegative least squares; the
//! full set of inertial parameters then follows from the part geometry. The
//! baseline estimator is the classical unconstrained least squares over the
//! ten standard parameters using the full rigid-body regressor.

mod nnls;

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

pub use nnls::{kkt_residuals, nnls, NnlsReport};

use crate::error::{Error, Result};
use crate::geom::{Point3, Vec3};
use crate::inertia::{
    centroid, compose, is_consistent, part_params_sensor_weighted, skew, InertialParams,
    PartPoints, Pose,
};

pub const GRAVITY: f64 = 9.81;

/// One timestamped force-torque measurement with the kinematic context.
/// All vector quantities are expressed in the sensor frame; `lin_acc` is the
/// kinematic acceleration of the sensor origin (zero at rest, not -g).
#[derive(Debug, Clone, PartialEq)]
pub struct WrenchSample {
    pub t: f64,
    pub force: Vec3,
    pub torque: Vec3,
    pub gravity_s: Vec3,
    pub lin_acc: Vec3,
    pub ang_acc: Vec3,
    pub ang_vel: Vec3,
    /// Part centroids in the sensor frame, when known (not serialized to CSV).
    pub part_centroids_s: Vec<Point3>,
}

/// Stacked quasi-static regressor A m = b over part masses.
#[derive(Debug, Clone)]
pub struct Regressor {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub block_count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverStatus {
    Converged,
    MaxIterations,
}

/// Identification output: per-part masses (empty for the 10-parameter
/// baseline), composed parameters, and solve diagnostics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IdentResult {
    pub masses: Vec<f64>,
    pub params: InertialParams,
    pub residual: f64,
    /// Condition number of the column-scaled regressor; None when a column
    /// vanishes (no excitation on that parameter).
    pub cond: Option<f64>,
    pub consistent: bool,
    pub status: SolverStatus,
    pub rank: usize,
    pub rank_deficient: bool,
    pub stalled_samples: usize,
}

/// Indices of samples where both acceleration norms fall below the
/// thresholds (the stalled timesteps of a stop-and-go motion).
pub fn detect_stall(samples: &[WrenchSample], lin_thresh: f64, ang_thresh: f64) -> Vec<usize> {
    samples
        .iter()
        .enumerate()
        .filter(|(_, s)| s.lin_acc.norm() < lin_thresh && s.ang_acc.norm() < ang_thresh)
        .map(|(i, _)| i)
        .collect()
}

/// One 6xP regressor block: forces see gravity times each part mass, torques
/// see the gravity moment about each part centroid.
pub fn build_block(gravity_s: &Vec3, centroids: &[Point3]) -> DMatrix<f64> {
    let p = centroids.len();
    assert!((1..=4).contains(&p), "1..=4 parts supported, got {p}");
    let mut a = DMatrix::zeros(6, p);
    let g_skew = skew(gravity_s);
    for (j, c) in centroids.iter().enumerate() {
        a.fixed_view_mut::<3, 1>(0, j).copy_from(gravity_s);
        let col = -g_skew * c.coords;
        a.fixed_view_mut::<3, 1>(3, j).copy_from(&col);
    }
    a
}

/// Stack per-sample blocks and wrenches into one regressor.
pub fn stack(blocks: &[DMatrix<f64>], wrenches: &[(Vec3, Vec3)]) -> Result<Regressor> {
    if blocks.is_empty() || blocks.len() != wrenches.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} blocks vs {} wrenches",
            blocks.len(),
            wrenches.len()
        )));
    }
    let p = blocks[0].ncols();
    if blocks.iter().any(|b| b.ncols() != p || b.nrows() != 6) {
        return Err(Error::ShapeMismatch("inconsistent block shapes".into()));
    }
    let k = blocks.len();
    let mut a = DMatrix::zeros(6 * k, p);
    let mut b = DVector::zeros(6 * k);
    for (i, (block, (f, tau))) in blocks.iter().zip(wrenches.iter()).enumerate() {
        a.view_mut((6 * i, 0), (6, p)).copy_from(block);
        b.fixed_view_mut::<3, 1>(6 * i, 0).copy_from(f);
        b.fixed_view_mut::<3, 1>(6 * i + 3, 0).copy_from(tau);
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("non-finite regressor".into()));
    }
    Ok(Regressor {
        a,
        b,
        block_count: k,
    })
}

/// Condition number of the column-scaled matrix (each column divided by its
/// Euclidean norm). Errors when a column is identically zero.
pub fn condition_number(a: &DMatrix<f64>) -> Result<f64> {
    let mut scaled = a.clone();
    for j in 0..a.ncols() {
        let norm = a.column(j).norm();
        if norm <= 0.0 {
            return Err(Error::ZeroColumn(j));
        }
        scaled.column_mut(j).scale_mut(1.0 / norm);
    }
    let svd = scaled.svd(false, false);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    Ok(if smin > 0.0 { smax / smin } else { f64::INFINITY })
}

fn numerical_rank(a: &DMatrix<f64>) -> usize {
    let svd = a.clone().svd(false, false);
    let smax = svd.singular_values.max();
    if smax <= 0.0 {
        return 0;
    }
    svd.singular_values.iter().filter(|&&s| s > 1e-8 * smax).count()
}

#[derive(Debug, Clone, Copy)]
pub struct StallThresholds {
    pub lin: f64,
    pub ang: f64,
}

impl Default for StallThresholds {
    fn default() -> Self {
        Self { lin: 1.0, ang: 1.0 }
    }
}

/// Identify part masses (and from them the full parameters) from stalled
/// stop-and-go samples.
///
/// `parts` hold point masses in the object frame; `poses` map the object
/// frame into the sensor frame, one per sample. Optional `weights` give the
/// per-point quadrature weights of each part (cell volumes); uniform when
/// absent, which is exact for equal-volume cells.
pub fn identify_hps(
    samples: &[WrenchSample],
    parts: &[PartPoints],
    poses: &[Pose],
    weights: Option<&[Vec<f64>]>,
    thresholds: StallThresholds,
) -> Result<IdentResult> {
    if parts.is_empty() {
        return Err(Error::EmptyPart);
    }
    if parts.len() > 4 {
        return Err(Error::TooManyParts { parts: parts.len() });
    }
    if poses.len() != samples.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} poses for {} samples",
            poses.len(),
            samples.len()
        )));
    }
    if let Some(w) = weights {
        if w.len() != parts.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} weight vectors for {} parts",
                w.len(),
                parts.len()
            )));
        }
    }

    let stalled = detect_stall(samples, thresholds.lin, thresholds.ang);
    if stalled.is_empty() {
        return Err(Error::NoStalledSamples);
    }

    let centroid_b: Vec<Point3> = parts
        .iter()
        .enumerate()
        .map(|(j, part)| match weights {
            Some(w) => {
                let total: f64 = w[j].iter().sum();
                let mut c = Vec3::zeros();
                for (p, &wi) in part.positions.iter().zip(&w[j]) {
                    c += wi * p.coords;
                }
                Point3::from(c / total)
            }
            None => centroid(part),
        })
        .collect();

    let mut blocks = Vec::with_capacity(stalled.len());
    let mut wrenches = Vec::with_capacity(stalled.len());
    for &i in &stalled {
        let pose = &poses[i];
        let cs: Vec<Point3> = centroid_b.iter().map(|c| pose.transform_point(c)).collect();
        blocks.push(build_block(&samples[i].gravity_s, &cs));
        wrenches.push((samples[i].force, samples[i].torque));
    }
    let reg = stack(&blocks, &wrenches)?;
    let (masses_vec, report) = nnls(&reg.a, &reg.b)?;
    let masses: Vec<f64> = masses_vec.iter().copied().collect();
    let residual = (&reg.a * &masses_vec - &reg.b).norm();
    let rank = numerical_rank(&reg.a);
    let cond = condition_number(&reg.a).ok();

    let first_pose = &poses[stalled[0]];
    let params = if masses.iter().any(|&m| m > 0.0) {
        let per_part: Vec<InertialParams> = parts
            .iter()
            .enumerate()
            .map(|(j, part)| {
                part_params_sensor_weighted(
                    part,
                    weights.map(|w| w[j].as_slice()),
                    masses[j],
                    first_pose,
                )
            })
            .collect::<Result<_>>()?;
        compose(&per_part)?
    } else {
        InertialParams::zero("sensor")
    };
    let consistent = is_consistent(&params);

    Ok(IdentResult {
        rank_deficient: rank < parts.len(),
        masses,
        params,
        residual,
        cond,
        consistent,
        status: if report.converged {
            SolverStatus::Converged
        } else {
            SolverStatus::MaxIterations
        },
        rank,
        stalled_samples: stalled.len(),
    })
}

/// Row map L(v) with I v = L(v) vech(I) for the fixed vech order.
fn inertia_row_map(v: &Vec3) -> nalgebra::SMatrix<f64, 3, 6> {
    nalgebra::SMatrix::<f64, 3, 6>::from_rows(&[
        nalgebra::RowSVector::<f64, 6>::from_row_slice(&[v.x, v.y, v.z, 0.0, 0.0, 0.0]),
        nalgebra::RowSVector::<f64, 6>::from_row_slice(&[0.0, v.x, 0.0, v.y, v.z, 0.0]),
        nalgebra::RowSVector::<f64, 6>::from_row_slice(&[0.0, 0.0, v.x, 0.0, v.y, v.z]),
    ])
}

/// Full rigid-body regressor row block for one sample, measured-wrench
/// convention (at rest the force row reads m g). Parameters are
/// (m, m c, vech I) with the inertia about the sensor origin.
pub fn ols_block(sample: &WrenchSample) -> DMatrix<f64> {
    let g_minus_a = sample.gravity_s - sample.lin_acc;
    let w = sample.ang_vel;
    let al = sample.ang_acc;
    let mut block = DMatrix::zeros(6, 10);
    // force rows
    block.fixed_view_mut::<3, 1>(0, 0).copy_from(&g_minus_a);
    let mc_force = -(skew(&al) + skew(&w) * skew(&w));
    block.fixed_view_mut::<3, 3>(0, 1).copy_from(&mc_force);
    // torque rows
    let mc_torque = -skew(&g_minus_a);
    block.fixed_view_mut::<3, 3>(3, 1).copy_from(&mc_torque);
    let i_map = -(inertia_row_map(&al) + skew(&w) * inertia_row_map(&w));
    block.fixed_view_mut::<3, 6>(3, 4).copy_from(&i_map);
    block
}

/// Classical unconstrained least squares over the ten inertial parameters,
/// using every sample. Rank deficiency is flagged and the minimum-norm
/// solution returned.
pub fn identify_ols(samples: &[WrenchSample]) -> Result<IdentResult> {
    if samples.len() < 2 {
        return Err(Error::TooFewPoints {
            have: samples.len(),
            need: 2,
        });
    }
    let k = samples.len();
    let mut a = DMatrix::zeros(6 * k, 10);
    let mut b = DVector::zeros(6 * k);
    for (i, s) in samples.iter().enumerate() {
        a.view_mut((6 * i, 0), (6, 10)).copy_from(&ols_block(s));
        b.fixed_view_mut::<3, 1>(6 * i, 0).copy_from(&s.force);
        b.fixed_view_mut::<3, 1>(6 * i + 3, 0).copy_from(&s.torque);
    }
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let phi = svd
        .solve(&b, 1e-8 * smax.max(1e-300))
        .map_err(|e| Error::InvalidParameter(format!("SVD solve failed: {e}")))?;
    let rank = numerical_rank(&a);
    let residual = (&a * &phi - &b).norm();
    let cond = condition_number(&a).ok();

    let mass = phi[0];
    let com = if mass.abs() > 1e-12 {
        Point3::new(phi[1] / mass, phi[2] / mass, phi[3] / mass)
    } else {
        Point3::origin()
    };
    let inertia = crate::inertia::unvech(&[phi[4], phi[5], phi[6], phi[7], phi[8], phi[9]]);
    let params = InertialParams::new(mass, com, &inertia, "sensor");
    let consistent = is_consistent(&params);

    Ok(IdentResult {
        masses: Vec::new(),
        params,
        residual,
        cond,
        consistent,
        status: SolverStatus::Converged,
        rank,
        rank_deficient: rank < 10,
        stalled_samples: samples.len(),
    })
}

const CSV_HEADER: &str = "t,fx,fy,fz,tx,ty,tz,gx,gy,gz,ax,ay,az,alx,aly,alz,wx,wy,wz";

/// Write samples as CSV (`t,f,tau,g,lin_acc,ang_acc,ang_vel`).
pub fn write_wrench_csv<W: Write>(samples: &[WrenchSample], mut w: W) -> Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for s in samples {
        let v = [
            s.t, s.force.x, s.force.y, s.force.z, s.torque.x, s.torque.y, s.torque.z,
            s.gravity_s.x, s.gravity_s.y, s.gravity_s.z, s.lin_acc.x, s.lin_acc.y, s.lin_acc.z,
            s.ang_acc.x, s.ang_acc.y, s.ang_acc.z, s.ang_vel.x, s.ang_vel.y, s.ang_vel.z,
        ];
        let row: Vec<String> = v.iter().map(|x| format!("{x}")).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

pub fn save_wrench_csv(samples: &[WrenchSample], path: impl AsRef<Path>) -> Result<()> {
    let f = std::fs::File::create(path)?;
    write_wrench_csv(samples, std::io::BufWriter::new(f))
}

pub fn read_wrench_csv<R: std::io::Read>(r: R) -> Result<Vec<WrenchSample>> {
    let mut lines = BufReader::new(r).lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty wrench CSV".into()))??;
    if header.trim() != CSV_HEADER {
        return Err(Error::Parse(format!("unexpected CSV header: {header}")));
    }
    let mut out = Vec::new();
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let vals: Vec<f64> = line
            .split(',')
            .map(|t| t.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Parse(format!("bad CSV value: {e}")))?;
        if vals.len() != 19 {
            return Err(Error::Parse(format!("expected 19 columns, got {}", vals.len())));
        }
        out.push(WrenchSample {
            t: vals[0],
            force: Vec3::new(vals[1], vals[2], vals[3]),
            torque: Vec3::new(vals[4], vals[5], vals[6]),
            gravity_s: Vec3::new(vals[7], vals[8], vals[9]),
            lin_acc: Vec3::new(vals[10], vals[11], vals[12]),
            ang_acc: Vec3::new(vals[13], vals[14], vals[15]),
            ang_vel: Vec3::new(vals[16], vals[17], vals[18]),
            part_centroids_s: Vec::new(),
        });
    }
    Ok(out)
}

pub fn load_wrench_csv(path: impl AsRef<Path>) -> Result<Vec<WrenchSample>> {
    let f = std::fs::File::open(path)?;
    read_wrench_csv(BufReader::new(f))
}

/// Per-sample poses as a JSON list of `{R: [9 row-major], p: [3]}`.
pub fn save_poses_json(poses: &[Pose], path: impl AsRef<Path>) -> Result<()> {
    let json = serde_json::to_string_pretty(poses)?;
    std::fs::write(path, json)?;
    Ok(())
}

pub fn load_poses_json(path: impl AsRef<Path>) -> Result<Vec<Pose>> {
    let text = std::fs::read_to_string(path)?;
    let poses: Vec<Pose> = serde_json::from_str(&text)?;
    for p in &poses {
        Pose::new(p.rotation, p.translation)?;
    }
    Ok(poses)
}

/// Convenience for tests and callers that only have one rigid grasp: repeat
/// a pose for every sample.
pub fn repeat_pose(pose: &Pose, n: usize) -> Vec<Pose> {
    vec![pose.clone(); n]
}
