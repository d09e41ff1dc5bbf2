//! Segmentation and identification quality metrics.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::inertia::{pseudoinertia, InertialParams};

/// A predicted/ground-truth labelling pair over the same point set.
#[derive(Debug, Clone)]
pub struct SegPair<'a> {
    pub predicted: &'a [u32],
    pub truth: &'a [u32],
}

impl<'a> SegPair<'a> {
    pub fn new(predicted: &'a [u32], truth: &'a [u32]) -> Result<Self> {
        if predicted.is_empty() || predicted.len() != truth.len() {
            return Err(Error::ShapeMismatch(format!(
                "predicted {} vs truth {}",
                predicted.len(),
                truth.len()
            )));
        }
        Ok(Self { predicted, truth })
    }
}

/// Undersegmentation error: the fraction of points bleeding out of the
/// plurality ground-truth region of their predicted segment. Zero for any
/// refinement of the truth.
pub fn use_error(pair: &SegPair) -> f64 {
    let n = pair.predicted.len();
    // predicted segment -> truth region -> count
    let mut table: BTreeMap<u32, BTreeMap<u32, usize>> = BTreeMap::new();
    for (&p, &t) in pair.predicted.iter().zip(pair.truth.iter()) {
        *table.entry(p).or_default().entry(t).or_insert(0) += 1;
    }
    let mut bleeding = 0usize;
    for regions in table.values() {
        let total: usize = regions.values().sum();
        // plurality region; ties go to the lower truth label (BTreeMap order)
        let plural = regions
            .iter()
            .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
            .map(|(_, &c)| c)
            .unwrap_or(0);
        bleeding += total - plural;
    }
    bleeding as f64 / n as f64
}

/// Global consistency error: min over directions of the mean local
/// refinement error. Zero when either segmentation refines the other.
pub fn gce(pair: &SegPair) -> f64 {
    let n = pair.predicted.len() as f64;
    let directed = |s1: &[u32], s2: &[u32]| -> f64 {
        // region sizes in s1 and intersection sizes
        let mut size1: BTreeMap<u32, usize> = BTreeMap::new();
        let mut inter: BTreeMap<(u32, u32), usize> = BTreeMap::new();
        for (&a, &b) in s1.iter().zip(s2.iter()) {
            *size1.entry(a).or_insert(0) += 1;
            *inter.entry((a, b)).or_insert(0) += 1;
        }
        // sum over points p of |R(s1,p) \ R(s2,p)| / |R(s1,p)|
        let mut total = 0.0;
        for ((a, _), &nab) in inter.iter() {
            let na = size1[a] as f64;
            total += nab as f64 * (na - nab as f64) / na;
        }
        total
    };
    let forward = directed(pair.predicted, pair.truth);
    let backward = directed(pair.truth, pair.predicted);
    forward.min(backward) / n
}

/// Geodesic distance between two sets of parameters on the SPD manifold of
/// pseudoinertia matrices: sqrt(1/2 sum ln^2 lambda_i) over the generalized
/// eigenvalues of (P(est), P(gt)). Errors when either matrix is not SPD.
pub fn riemannian_error(est: &InertialParams, gt: &InertialParams) -> Result<f64> {
    let p1 = pseudoinertia(est);
    let p2 = pseudoinertia(gt);
    let chol2 = nalgebra::Cholesky::new(p2).ok_or(Error::NotSpd)?;
    let l_inv = chol2.l().try_inverse().ok_or(Error::NotSpd)?;
    let m = l_inv * p1 * l_inv.transpose();
    let sym = (m + m.transpose()) * 0.5;
    let eig = nalgebra::SymmetricEigen::new(sym);
    let mut sum = 0.0;
    for &l in eig.eigenvalues.iter() {
        if l <= 0.0 {
            return Err(Error::NotSpd);
        }
        sum += l.ln().powi(2);
    }
    Ok((0.5 * sum).sqrt())
}

/// Size-normalized percentage errors.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SizeErrors {
    pub e_m: f64,
    pub e_c: [f64; 3],
    pub e_j: [f64; 6],
    pub e_c_mean: f64,
    pub e_j_mean: f64,
}

/// Percentage errors normalized by the object's mass and bounding box:
/// mass by the true mass, each centre-of-mass axis by the matching extent,
/// and each inertia component by mass times the product of the two extents
/// complementary to the component's indices.
pub fn size_errors(
    est: &InertialParams,
    gt: &InertialParams,
    bbox_extents: &Vec3,
    gt_mass: f64,
) -> SizeErrors {
    let e_m = 100.0 * (est.mass - gt.mass).abs() / gt_mass;
    let mut e_c = [0.0; 3];
    for k in 0..3 {
        e_c[k] = 100.0 * (est.com[k] - gt.com[k]).abs() / bbox_extents[k];
    }
    // vech order (Ixx, Ixy, Ixz, Iyy, Iyz, Izz)
    const PAIRS: [(usize, usize); 6] = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)];
    let mut e_j = [0.0; 6];
    for (k, &(i, j)) in PAIRS.iter().enumerate() {
        let (a, b) = if i == j {
            let others: Vec<usize> = (0..3).filter(|&x| x != i).collect();
            (others[0], others[1])
        } else {
            let other = 3 - i - j;
            (other, other)
        };
        let norm = gt_mass * bbox_extents[a] * bbox_extents[b];
        e_j[k] = 100.0 * (est.inertia_vech[k] - gt.inertia_vech[k]).abs() / norm;
    }
    SizeErrors {
        e_m,
        e_c,
        e_j,
        e_c_mean: e_c.iter().sum::<f64>() / 3.0,
        e_j_mean: e_j.iter().sum::<f64>() / 6.0,
    }
}

/// One benchmark report row.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricRow {
    pub object: String,
    pub algo: String,
    pub noise: String,
    pub seed: u64,
    pub e_m: f64,
    pub e_c_mean: f64,
    pub e_j_mean: f64,
    pub e_rie: Option<f64>,
    pub consistent: bool,
}
