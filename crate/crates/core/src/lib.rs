//! Part-level shape segmentation and inertial parameter identification.
//!
//! This crate implements a pipeline for estimating the full set of inertial
//! parameters (mass, centre of mass, inertia tensor) of a rigid object from
//! quasi-static "stop-and-go" force-torque measurements, by exploiting the
//! observation that man-made objects are usually assemblies of a few parts
//! with approximately homogeneous densities.
//!
//! The pipeline:
//!
//! 1. [`geom`] — convex hulls, watertight-mesh voxelization, surface
//!    sampling, mesh distance, and the cell complex that feeds segmentation.
//! 2. [`segment`] — bottom-up point clustering followed by hierarchical
//!    convexity-driven merging of volumetric cells into parts.
//! 3. [`inertia`] — point-mass discretized inertial parameters, frame
//!    transforms, composition, and the physical-consistency test.
//! 4. [`identify`] — the stop-and-go wrench regressor over part masses,
//!    the nonnegative least-squares solver, and an unconstrained
//!    10-parameter least-squares baseline.
//! 5. [`synth`] — parametric multi-part objects with exact ground truth,
//!    trajectory generation, wrench simulation, and sensor noise models.
//! 6. [`metrics`] — segmentation quality (USE, GCE) and identification
//!    error metrics (size-normalized errors, SPD geodesic distance).
//! 7. `bench` — the benchmark matrix runner used by the CLI.

pub mod bench;
pub mod error;
pub mod geom;
pub mod identify;
pub mod inertia;
pub mod metrics;
pub mod segment;
pub mod synth;

pub use error::{Error, Result};
