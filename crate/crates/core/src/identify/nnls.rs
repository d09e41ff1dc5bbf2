//! Nonnegative least squares via the Lawson-Hanson active-set method.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct NnlsReport {
    pub converged: bool,
    pub iterations: usize,
}

/// Solve min ||A x - b|| subject to x >= 0.
///
/// Returns the solution and a report; when the iteration cap is hit the best
/// iterate so far is returned with `converged = false`.
pub fn nnls(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<(DVector<f64>, NnlsReport)> {
    let (m, n) = a.shape();
    if m == 0 || n == 0 {
        return Err(Error::InvalidParameter("empty NNLS problem".into()));
    }
    if b.len() != m {
        return Err(Error::ShapeMismatch(format!(
            "A is {m}x{n} but b has {} entries",
            b.len()
        )));
    }
    if a.iter().any(|v| !v.is_finite()) || b.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("non-finite NNLS input".into()));
    }

    let atb = a.transpose() * b;
    let scale = atb.amax().max(f64::MIN_POSITIVE);
    let tol_w = 1e-12 * scale;

    let mut x = DVector::zeros(n);
    let mut passive = vec![false; n];
    let max_outer = 3 * n + 30;
    let mut iterations = 0usize;

    for _ in 0..max_outer {
        iterations += 1;
        let w = &atb - a.transpose() * (a * &x);
        // most violated inactive coordinate
        let mut best: Option<(f64, usize)> = None;
        for j in 0..n {
            if passive[j] {
                continue;
            }
            if w[j] > tol_w && best.is_none_or(|(bw, _)| w[j] > bw) {
                best = Some((w[j], j));
            }
        }
        let Some((_, j_new)) = best else {
            return Ok((x, NnlsReport {
                converged: true,
                iterations,
            }));
        };
        passive[j_new] = true;

        // inner loop: restrict to the passive set and back off along the
        // segment to the previous iterate until feasible
        loop {
            let cols: Vec<usize> = (0..n).filter(|&j| passive[j]).collect();
            let sub = a.select_columns(cols.iter());
            let svd = sub.svd(true, true);
            let z_sub = svd.solve(b, 1e-12 * svd.singular_values.max().max(1e-300))
                .map_err(|e| Error::InvalidParameter(format!("SVD solve failed: {e}")))?;

            let mut z = DVector::zeros(n);
            for (k, &j) in cols.iter().enumerate() {
                z[j] = z_sub[k];
            }
            if cols.iter().all(|&j| z[j] > 0.0) {
                x = z;
                break;
            }
            let mut alpha = f64::INFINITY;
            for &j in &cols {
                if z[j] <= 0.0 {
                    let denom = x[j] - z[j];
                    if denom > 0.0 {
                        alpha = alpha.min(x[j] / denom);
                    } else {
                        alpha = 0.0;
                    }
                }
            }
            if !alpha.is_finite() {
                alpha = 0.0;
            }
            x = &x + (z - &x) * alpha;
            for j in 0..n {
                if passive[j] && x[j].abs() <= 1e-14 * scale.max(1.0) {
                    x[j] = 0.0;
                    passive[j] = false;
                }
            }
            if !passive.iter().any(|&p| p) {
                // everything clamped back out; exit the inner loop with x = 0
                x = DVector::zeros(n);
                break;
            }
        }
    }
    Ok((x, NnlsReport {
        converged: false,
        iterations,
    }))
}

/// KKT residuals for a candidate NNLS solution:
/// (primal infeasibility, dual infeasibility, complementary slackness),
/// where dual feasibility demands grad = A^T(Ax - b) >= 0 on the whole space.
pub fn kkt_residuals(a: &DMatrix<f64>, b: &DVector<f64>, x: &DVector<f64>) -> (f64, f64, f64) {
    let grad = a.transpose() * (a * x - b);
    let primal = x.iter().fold(0.0f64, |acc, &v| acc.max(-v));
    let dual = grad.iter().fold(0.0f64, |acc, &g| acc.max(-g));
    let comp = x
        .iter()
        .zip(grad.iter())
        .fold(0.0f64, |acc, (&xi, &gi)| acc.max((xi * gi).abs()));
    (primal, dual, comp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_problem() {
        let a = DMatrix::identity(4, 4);
        let b = DVector::from_vec(vec![1.0, 2.0, 3.0, 4.0]);
        let (x, rep) = nnls(&a, &b).unwrap();
        assert!(rep.converged);
        for (xi, bi) in x.iter().zip(b.iter()) {
            assert!((xi - bi).abs() < 1e-12);
        }
    }

    #[test]
    fn clamped_coordinate() {
        let a = DMatrix::identity(2, 2);
        let b = DVector::from_vec(vec![1.0, -1.0]);
        let (x, rep) = nnls(&a, &b).unwrap();
        assert!(rep.converged);
        assert!((x[0] - 1.0).abs() < 1e-12);
        assert_eq!(x[1], 0.0);
    }

    #[test]
    fn zero_rhs() {
        let a = DMatrix::from_fn(6, 3, |i, j| ((i + j) as f64).sin());
        let b = DVector::zeros(6);
        let (x, rep) = nnls(&a, &b).unwrap();
        assert!(rep.converged);
        assert!(x.iter().all(|&v| v == 0.0));
    }

    /// Exhaustive oracle: try every active set, solve the unconstrained LS
    /// on the free coordinates, keep the feasible minimum.
    fn brute_force_nnls(a: &DMatrix<f64>, b: &DVector<f64>) -> f64 {
        let n = a.ncols();
        let mut best = f64::INFINITY;
        for mask in 0..(1u32 << n) {
            let free: Vec<usize> = (0..n).filter(|j| mask & (1 << j) != 0).collect();
            let x = if free.is_empty() {
                DVector::zeros(n)
            } else {
                let sub = a.select_columns(free.iter());
                let svd = sub.svd(true, true);
                let sol = match svd.solve(b, 1e-12) {
                    Ok(s) => s,
                    Err(_) => continue,
                };
                let mut x = DVector::zeros(n);
                for (k, &j) in free.iter().enumerate() {
                    x[j] = sol[k];
                }
                x
            };
            if x.iter().any(|&v| v < -1e-12) {
                continue;
            }
            best = best.min((a * &x - b).norm());
        }
        best
    }

    #[test]
    fn random_problems_match_active_set_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for trial in 0..100 {
            let a = DMatrix::from_fn(12, 4, |_, _| rng.random::<f64>() * 2.0 - 1.0);
            let b = DVector::from_fn(12, |_, _| rng.random::<f64>() * 2.0 - 1.0);
            let (x, rep) = nnls(&a, &b).unwrap();
            assert!(rep.converged, "trial {trial} did not converge");
            let obj = (&a * &x - &b).norm();
            let oracle = brute_force_nnls(&a, &b);
            assert!(
                obj <= oracle + 1e-6,
                "trial {trial}: objective {obj} vs oracle {oracle}"
            );
            let scale = (a.transpose() * &b).amax();
            let (primal, dual, comp) = kkt_residuals(&a, &b, &x);
            assert!(primal <= 1e-12);
            assert!(dual <= 1e-8 * scale, "dual {dual} vs scale {scale}");
            assert!(comp <= 1e-8 * scale.max(1.0));
        }
    }

    #[test]
    fn deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = DMatrix::from_fn(18, 4, |_, _| rng.random::<f64>() * 2.0 - 1.0);
        let b = DVector::from_fn(18, |_, _| rng.random::<f64>());
        let (x1, _) = nnls(&a, &b).unwrap();
        let (x2, _) = nnls(&a, &b).unwrap();
        for (u, v) in x1.iter().zip(x2.iter()) {
            assert_eq!(u.to_bits(), v.to_bits());
        }
    }
}
