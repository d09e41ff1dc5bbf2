//! Python extension module exposing the main types and operations:
//! synthetic object generation, part segmentation, wrench simulation,
//! inertial identification, and the quality metrics.
//!
//! Structured values cross the boundary as plain lists and JSON strings so
//! the module has no numpy dependency.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use hps_core::geom::{convex_hull, hull_volume, Point3, PointCloud, TriMesh};
use hps_core::identify::{identify_hps, identify_ols, repeat_pose, StallThresholds};
use hps_core::inertia::InertialParams;
use hps_core::metrics::{riemannian_error, size_errors, SegPair};
use hps_core::segment::{segment_object, SegmentParams, SegmentationFile};
use hps_core::synth::{
    add_noise, build_object, builtin_names, builtin_spec, gen_stop_and_go, preset_noise,
    simulate_wrench, GenOptions, NoiseLevel, ObjectSpec,
};

fn err<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// A generated object: mesh, labelled cloud, and ground truth.
#[pyclass]
struct BuiltObject {
    inner: hps_core::synth::BuiltObject,
}

#[pymethods]
impl BuiltObject {
    /// Cloud point positions as a list of (x, y, z).
    fn positions(&self) -> Vec<(f64, f64, f64)> {
        self.inner
            .cloud
            .positions()
            .iter()
            .map(|p| (p.x, p.y, p.z))
            .collect()
    }

    fn colours(&self) -> Vec<(u8, u8, u8)> {
        self.inner
            .cloud
            .colours()
            .iter()
            .map(|c| (c[0], c[1], c[2]))
            .collect()
    }

    fn labels(&self) -> Vec<u32> {
        self.inner.cloud.labels().unwrap_or(&[]).to_vec()
    }

    fn mesh_vertices(&self) -> Vec<(f64, f64, f64)> {
        self.inner
            .mesh
            .vertices()
            .iter()
            .map(|p| (p.x, p.y, p.z))
            .collect()
    }

    fn mesh_faces(&self) -> Vec<(u32, u32, u32)> {
        self.inner
            .mesh
            .faces()
            .iter()
            .map(|f| (f[0], f[1], f[2]))
            .collect()
    }

    fn n_parts(&self) -> usize {
        self.inner.n_parts()
    }

    fn part_masses(&self) -> Vec<f64> {
        self.inner.part_masses.clone()
    }

    /// Ground-truth parameters in the sensor frame, JSON.
    fn gt_params_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner.gt_sensor).map_err(err)
    }

    fn bbox_extents(&self) -> (f64, f64, f64) {
        let e = self.inner.bbox_extents();
        (e.x, e.y, e.z)
    }
}

/// Segmentation output: labels, hierarchy size, and hull-evaluation count.
#[pyclass]
struct Segmentation {
    file: SegmentationFile,
}

#[pymethods]
impl Segmentation {
    fn cell_labels(&self) -> Vec<u32> {
        self.file.cell_labels.clone()
    }

    fn point_labels(&self) -> Vec<u32> {
        self.file.point_labels.clone()
    }

    fn n_parts(&self) -> u32 {
        self.file.n_parts
    }

    fn hull_eval_count(&self) -> u64 {
        self.file.hull_eval_count
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.file).map_err(err)
    }
}

/// Names of the built-in object recipes.
#[pyfunction]
fn builtins() -> Vec<String> {
    builtin_names().iter().map(|s| s.to_string()).collect()
}

/// JSON spec of a built-in object.
#[pyfunction]
fn builtin_spec_json(name: &str) -> PyResult<String> {
    Ok(builtin_spec(name).map_err(err)?.to_json())
}

/// Build mesh, cloud, and ground truth from an object spec JSON.
#[pyfunction]
#[pyo3(signature = (spec_json, points = 20000, seed = 0, colour_jitter = 3.0))]
fn generate(spec_json: &str, points: usize, seed: u64, colour_jitter: f64) -> PyResult<BuiltObject> {
    let spec = ObjectSpec::from_json(spec_json).map_err(err)?;
    let inner = build_object(
        &spec,
        &GenOptions {
            points,
            colour_jitter,
            seed,
        },
    )
    .map_err(err)?;
    Ok(BuiltObject { inner })
}

/// Segment a built object into `target_parts` approximately convex parts.
#[pyfunction]
#[pyo3(signature = (obj, target_parts, cell_size = None, use_initial_clustering = true, seed = 0))]
fn segment(
    obj: &BuiltObject,
    target_parts: usize,
    cell_size: Option<f64>,
    use_initial_clustering: bool,
    seed: u64,
) -> PyResult<Segmentation> {
    let params = SegmentParams {
        target_parts,
        cell_size,
        use_initial_clustering,
        seed,
        ..SegmentParams::default()
    };
    let seg = segment_object(&obj.inner.cloud, &obj.inner.mesh, &params).map_err(err)?;
    Ok(Segmentation {
        file: SegmentationFile::from_segmented(&seg),
    })
}

/// Simulate a stop-and-go run and identify the parameters; returns the
/// identification result as JSON. `algo` is "hps" or "ols".
#[pyfunction]
#[pyo3(signature = (obj, seg, algo = "hps", noise = "none", seed = 0))]
fn simulate_and_identify(
    obj: &BuiltObject,
    seg: &Segmentation,
    algo: &str,
    noise: &str,
    seed: u64,
) -> PyResult<String> {
    let level: NoiseLevel = noise.parse().map_err(err)?;
    let traj = gen_stop_and_go(3);
    let sim = simulate_wrench(&obj.inner.gt_sensor, &traj, traj.sample_rate);
    let samples = add_noise(&sim.samples, &preset_noise(level).with_seed(seed));
    let result = match algo {
        "hps" => {
            let parts = seg.file.part_points().map_err(err)?;
            let poses = repeat_pose(&obj.inner.spec.grasp_frame, samples.len());
            identify_hps(&samples, &parts, &poses, None, StallThresholds::default()).map_err(err)?
        }
        "ols" => identify_ols(&samples).map_err(err)?,
        other => return Err(err(format!("unknown algorithm '{other}'"))),
    };
    serde_json::to_string(&result).map_err(err)
}

/// Undersegmentation error of predicted vs ground-truth labels.
#[pyfunction]
fn use_error(predicted: Vec<u32>, truth: Vec<u32>) -> PyResult<f64> {
    let pair = SegPair::new(&predicted, &truth).map_err(err)?;
    Ok(hps_core::metrics::use_error(&pair))
}

/// Global consistency error of predicted vs ground-truth labels.
#[pyfunction]
fn gce(predicted: Vec<u32>, truth: Vec<u32>) -> PyResult<f64> {
    let pair = SegPair::new(&predicted, &truth).map_err(err)?;
    Ok(hps_core::metrics::gce(&pair))
}

/// Volume of the convex hull of a 3D point set.
#[pyfunction]
fn convex_hull_volume(points: Vec<(f64, f64, f64)>) -> PyResult<f64> {
    let pts: Vec<Point3> = points.iter().map(|&(x, y, z)| Point3::new(x, y, z)).collect();
    let hull = convex_hull(&pts).map_err(err)?;
    hull_volume(&hull).map_err(err)
}

/// Nonnegative least squares: rows of `a` against `b`. Returns the solution.
#[pyfunction]
fn nnls(a: Vec<Vec<f64>>, b: Vec<f64>) -> PyResult<Vec<f64>> {
    let rows = a.len();
    let cols = a.first().map(|r| r.len()).unwrap_or(0);
    if a.iter().any(|r| r.len() != cols) {
        return Err(err("ragged matrix"));
    }
    let mat = nalgebra_matrix(rows, cols, &a);
    let rhs = nalgebra::DVector::from_vec(b);
    let (x, _report) = hps_core::identify::nnls(&mat, &rhs).map_err(err)?;
    Ok(x.iter().copied().collect())
}

fn nalgebra_matrix(rows: usize, cols: usize, a: &[Vec<f64>]) -> nalgebra::DMatrix<f64> {
    nalgebra::DMatrix::from_fn(rows, cols, |i, j| a[i][j])
}

/// Geodesic distance between two parameter sets (JSON) on the SPD manifold.
#[pyfunction]
fn riemannian_distance(est_json: &str, gt_json: &str) -> PyResult<f64> {
    let est: InertialParams = serde_json::from_str(est_json).map_err(err)?;
    let gt: InertialParams = serde_json::from_str(gt_json).map_err(err)?;
    riemannian_error(&est, &gt).map_err(err)
}

/// Size-normalized percentage errors (e_m, e_C mean, e_J mean).
#[pyfunction]
fn size_error_means(
    est_json: &str,
    gt_json: &str,
    bbox_extents: (f64, f64, f64),
) -> PyResult<(f64, f64, f64)> {
    let est: InertialParams = serde_json::from_str(est_json).map_err(err)?;
    let gt: InertialParams = serde_json::from_str(gt_json).map_err(err)?;
    let ext = hps_core::geom::Vec3::new(bbox_extents.0, bbox_extents.1, bbox_extents.2);
    let se = size_errors(&est, &gt, &ext, gt.mass);
    Ok((se.e_m, se.e_c_mean, se.e_j_mean))
}

/// Physical consistency of a parameter set (JSON).
#[pyfunction]
fn is_consistent(params_json: &str) -> PyResult<bool> {
    let params: InertialParams = serde_json::from_str(params_json).map_err(err)?;
    Ok(hps_core::inertia::is_consistent(&params))
}

/// Parse an OBJ mesh and return its watertight flag and enclosed volume.
#[pyfunction]
fn mesh_volume(obj_text: &str) -> PyResult<f64> {
    let mesh = TriMesh::read_obj(obj_text.as_bytes()).map_err(err)?;
    mesh.enclosed_volume().map_err(err)
}

/// Parse an ASCII PLY cloud and return the point count.
#[pyfunction]
fn ply_point_count(ply_text: &str) -> PyResult<usize> {
    let cloud = PointCloud::read_ply(ply_text.as_bytes()).map_err(err)?;
    Ok(cloud.len())
}

#[pymodule]
fn hps_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<BuiltObject>()?;
    m.add_class::<Segmentation>()?;
    m.add_function(wrap_pyfunction!(builtins, m)?)?;
    m.add_function(wrap_pyfunction!(builtin_spec_json, m)?)?;
    m.add_function(wrap_pyfunction!(generate, m)?)?;
    m.add_function(wrap_pyfunction!(segment, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_and_identify, m)?)?;
    m.add_function(wrap_pyfunction!(use_error, m)?)?;
    m.add_function(wrap_pyfunction!(gce, m)?)?;
    m.add_function(wrap_pyfunction!(convex_hull_volume, m)?)?;
    m.add_function(wrap_pyfunction!(nnls, m)?)?;
    m.add_function(wrap_pyfunction!(riemannian_distance, m)?)?;
    m.add_function(wrap_pyfunction!(size_error_means, m)?)?;
    m.add_function(wrap_pyfunction!(is_consistent, m)?)?;
    m.add_function(wrap_pyfunction!(mesh_volume, m)?)?;
    m.add_function(wrap_pyfunction!(ply_point_count, m)?)?;
    Ok(())
}
