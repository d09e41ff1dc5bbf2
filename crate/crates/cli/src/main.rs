//! `hps` command-line tool.
//!
//! Subcommands: `gen` (synthetic object files), `segment` (part
//! segmentation), `simulate` (trajectory + wrench + noise), `identify`
//! (inertial parameters from wrench data), `benchmark` (the full matrix),
//! and `metrics` (quality numbers from result files).
//!
//! Exit codes: 2 invalid input, 3 segmentation failure, 4 no stalled
//! samples. Diagnostics go to stderr; with `--quiet` stdout carries data
//! only.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use hps_core::bench::{run_benchmark, write_table_csv, BenchmarkConfig};
use hps_core::error::Error as CoreError;
use hps_core::geom::{PointCloud, TriMesh, Vec3};
use hps_core::identify::{
    identify_hps, identify_ols, load_poses_json, load_wrench_csv, repeat_pose, save_poses_json,
    save_wrench_csv, StallThresholds,
};
use hps_core::inertia::InertialParams;
use hps_core::metrics::{gce, riemannian_error, size_errors, use_error, MetricRow, SegPair};
use hps_core::segment::{segment_object, SegmentParams, SegmentationFile};
use hps_core::synth::{
    add_noise, build_object, gen_stop_and_go, preset_noise, simulate_wrench, GenOptions,
    NoiseLevel, ObjectSpec,
};

#[derive(Parser)]
#[command(name = "hps", version, about = "Part segmentation and stop-and-go inertial identification")]
struct Cli {
    /// Print only machine-readable data on stdout.
    #[arg(long, global = true)]
    quiet: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate mesh.obj, cloud.ply, gt_params.json, gt_labels.json.
    Gen(GenArgs),
    /// Segment a cloud/mesh pair into approximately convex parts.
    Segment(SegmentArgs),
    /// Simulate a stop-and-go trajectory and its wrench data.
    Simulate(SimulateArgs),
    /// Identify inertial parameters from wrench data.
    Identify(IdentifyArgs),
    /// Run the benchmark matrix from a JSON config.
    Benchmark(BenchmarkArgs),
    /// Compute metrics from result files.
    Metrics(MetricsArgs),
}

#[derive(Args)]
struct GenArgs {
    /// Built-in object name or path to an object spec JSON.
    #[arg(long)]
    spec: String,
    #[arg(long)]
    out_dir: PathBuf,
    /// Surface sample budget.
    #[arg(long, default_value_t = 20000)]
    points: usize,
    /// Colour jitter sigma, RGB units.
    #[arg(long, default_value_t = 3.0)]
    colour_jitter: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct SegmentArgs {
    #[arg(long)]
    cloud: PathBuf,
    #[arg(long)]
    mesh: PathBuf,
    #[arg(long)]
    target_parts: usize,
    /// Voxel cell size in metres (default: bbox max extent / 64).
    #[arg(long)]
    cell_size: Option<f64>,
    #[arg(long, default_value_t = 50)]
    desired_clusters: usize,
    /// Position weight of the dissimilarity.
    #[arg(long, default_value_t = 1.0)]
    lambda_p: f64,
    /// Colour weight of the dissimilarity.
    #[arg(long, default_value_t = 0.01)]
    lambda_l: f64,
    /// Normal weight of the dissimilarity.
    #[arg(long, default_value_t = 1.0)]
    lambda_n: f64,
    /// Initial similarity threshold (default: median heuristic).
    #[arg(long)]
    beta0: Option<f64>,
    /// Run the merge from singleton cells, skipping the warm start.
    #[arg(long)]
    no_initial_clustering: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output segmentation JSON path.
    #[arg(long, default_value = "segmentation.json")]
    out: PathBuf,
    /// Optional labelled PLY output.
    #[arg(long)]
    labelled_ply: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Ground-truth parameters JSON (sensor frame), e.g. from `gen`.
    #[arg(long)]
    gt_params: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
    /// Axes of the pose tour (1..=3).
    #[arg(long, default_value_t = 3)]
    axes: usize,
    #[arg(long, default_value_t = 100.0)]
    rate: f64,
    #[arg(long, default_value_t = 2.0)]
    dwell: f64,
    #[arg(long, default_value_t = 1.5)]
    transit: f64,
    #[arg(long, default_value = "none")]
    noise: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct IdentifyArgs {
    #[arg(long)]
    wrench: PathBuf,
    #[arg(long)]
    poses: PathBuf,
    /// Segmentation JSON (required for --algo hps).
    #[arg(long)]
    segmentation: Option<PathBuf>,
    #[arg(long, default_value = "hps")]
    algo: String,
    #[arg(long, default_value_t = 1.0)]
    lin_threshold: f64,
    #[arg(long, default_value_t = 1.0)]
    ang_threshold: f64,
    /// Output result JSON (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchmarkArgs {
    /// Benchmark config JSON.
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct MetricsArgs {
    /// Estimated parameters JSON (IdentResult or InertialParams).
    #[arg(long)]
    est: PathBuf,
    /// Ground-truth parameters JSON.
    #[arg(long)]
    gt: PathBuf,
    /// Bounding-box extents "ex,ey,ez" (metres); or use --mesh.
    #[arg(long)]
    bbox_extents: Option<String>,
    /// Mesh whose bounding box supplies the extents.
    #[arg(long)]
    mesh: Option<PathBuf>,
    /// Predicted labels source (segmentation JSON or labelled PLY).
    #[arg(long)]
    pred_labels: Option<PathBuf>,
    /// Ground-truth labels source (gt_labels JSON or labelled PLY).
    #[arg(long)]
    truth_labels: Option<PathBuf>,
    #[arg(long, default_value = "")]
    object: String,
    #[arg(long, default_value = "")]
    algo: String,
    #[arg(long, default_value = "")]
    noise: String,
}

/// Exit code conventions per failure class.
fn exit_code_for(err: &anyhow::Error) -> u8 {
    if let Some(core) = err.downcast_ref::<CoreError>() {
        return match core {
            CoreError::NoStalledSamples => 4,
            CoreError::DisconnectedComplex { .. }
            | CoreError::KOutOfRange { .. }
            | CoreError::ResolutionTooCoarse { .. }
            | CoreError::EmptyGrid => 3,
            _ => 2,
        };
    }
    2
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let quiet = cli.quiet;
    let result = match cli.command {
        Command::Gen(args) => cmd_gen(args, quiet),
        Command::Segment(args) => cmd_segment(args, quiet),
        Command::Simulate(args) => cmd_simulate(args, quiet),
        Command::Identify(args) => cmd_identify(args, quiet),
        Command::Benchmark(args) => cmd_benchmark(args, quiet),
        Command::Metrics(args) => cmd_metrics(args, quiet),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}

fn resolve_spec(name_or_path: &str) -> anyhow::Result<ObjectSpec> {
    Ok(hps_core::bench::resolve_spec(name_or_path)?.1)
}

fn cmd_gen(args: GenArgs, quiet: bool) -> anyhow::Result<()> {
    let spec = resolve_spec(&args.spec)?;
    let built = build_object(
        &spec,
        &GenOptions {
            points: args.points,
            colour_jitter: args.colour_jitter,
            seed: args.seed,
        },
    )?;
    std::fs::create_dir_all(&args.out_dir)?;
    built.mesh.save_obj(args.out_dir.join("mesh.obj"))?;
    built.cloud.save_ply(args.out_dir.join("cloud.ply"))?;
    std::fs::write(
        args.out_dir.join("gt_params.json"),
        serde_json::to_string_pretty(&built.gt_sensor)?,
    )?;
    let labels = serde_json::json!({
        "n_parts": built.n_parts(),
        "point_labels": built.cloud.labels().unwrap_or(&[]),
        "part_masses": built.part_masses,
    });
    std::fs::write(
        args.out_dir.join("gt_labels.json"),
        serde_json::to_string_pretty(&labels)?,
    )?;
    std::fs::write(args.out_dir.join("spec.json"), spec.to_json())?;
    if !quiet {
        eprintln!(
            "wrote mesh.obj cloud.ply gt_params.json gt_labels.json spec.json to {}",
            args.out_dir.display()
        );
    }
    Ok(())
}

fn cmd_segment(args: SegmentArgs, quiet: bool) -> anyhow::Result<()> {
    let cloud = PointCloud::load_ply(&args.cloud)?;
    let mesh = TriMesh::load_obj(&args.mesh)?;
    let params = SegmentParams {
        weights: hps_core::segment::ClusterWeights {
            lambda_p: args.lambda_p,
            lambda_l: args.lambda_l,
            lambda_n: args.lambda_n,
        },
        desired_clusters: args.desired_clusters,
        cell_size: args.cell_size,
        target_parts: args.target_parts,
        beta0: args.beta0,
        seed: args.seed,
        use_initial_clustering: !args.no_initial_clustering,
    };
    let start = std::time::Instant::now();
    let seg = segment_object(&cloud, &mesh, &params)?;
    let elapsed = start.elapsed().as_secs_f64();
    let file = SegmentationFile::from_segmented(&seg);
    file.save(&args.out)?;
    if let Some(ply) = &args.labelled_ply {
        let mut labelled = cloud.clone();
        labelled.set_labels(Some(seg.result.point_labels.clone()));
        labelled.save_ply(ply)?;
    }

    let mut report = serde_json::json!({
        "n_parts": seg.result.n_parts,
        "cells": seg.complex.len(),
        "hull_eval_count": seg.result.hull_evals,
        "wall_time_s": elapsed,
    });
    if let Some(truth) = cloud.labels() {
        let pair = SegPair::new(&seg.result.point_labels, truth)?;
        report["use"] = serde_json::json!(use_error(&pair));
        report["gce"] = serde_json::json!(gce(&pair));
    }
    println!("{}", serde_json::to_string(&report)?);
    if !quiet {
        eprintln!(
            "segmented into {} parts, {} hull evaluations, {:.2}s; wrote {}",
            seg.result.n_parts,
            seg.result.hull_evals,
            elapsed,
            args.out.display()
        );
    }
    Ok(())
}

fn cmd_simulate(args: SimulateArgs, quiet: bool) -> anyhow::Result<()> {
    let text = std::fs::read_to_string(&args.gt_params)?;
    let params: InertialParams = serde_json::from_str(&text)?;
    let level: NoiseLevel = args.noise.parse::<NoiseLevel>()?;
    let mut traj = gen_stop_and_go(args.axes);
    traj.dwell = args.dwell;
    traj.transit = args.transit;
    traj.sample_rate = args.rate;
    let sim = simulate_wrench(&params, &traj, args.rate);
    let samples = add_noise(&sim.samples, &preset_noise(level).with_seed(args.seed));
    std::fs::create_dir_all(&args.out_dir)?;
    save_wrench_csv(&samples, args.out_dir.join("wrench.csv"))?;
    // the object pose relative to the sensor is the grasp, fixed per sample
    let poses = repeat_pose(&hps_core::inertia::Pose::identity(), samples.len());
    save_poses_json(&poses, args.out_dir.join("poses.json"))?;
    std::fs::write(
        args.out_dir.join("dwell_mask.json"),
        serde_json::to_string(&sim.dwell_mask)?,
    )?;
    if !quiet {
        eprintln!(
            "wrote wrench.csv ({} samples), poses.json, dwell_mask.json to {}",
            samples.len(),
            args.out_dir.display()
        );
    }
    Ok(())
}

fn cmd_identify(args: IdentifyArgs, quiet: bool) -> anyhow::Result<()> {
    let samples = load_wrench_csv(&args.wrench)?;
    let poses = load_poses_json(&args.poses)?;
    let thresholds = StallThresholds {
        lin: args.lin_threshold,
        ang: args.ang_threshold,
    };
    let result = match args.algo.as_str() {
        "hps" => {
            let seg_path = args.segmentation.as_ref().ok_or_else(|| {
                anyhow::anyhow!(CoreError::InvalidParameter(
                    "--segmentation is required for --algo hps".into()
                ))
            })?;
            let seg = SegmentationFile::load(seg_path)?;
            let parts = seg.part_points()?;
            identify_hps(&samples, &parts, &poses, None, thresholds)?
        }
        "ols" => identify_ols(&samples)?,
        other => {
            return Err(anyhow::anyhow!(CoreError::InvalidParameter(format!(
                "unknown algorithm '{other}'"
            ))))
        }
    };
    if result.rank_deficient && !quiet {
        eprintln!(
            "warning: rank-deficient data matrix (rank {}); some parameters are unidentifiable",
            result.rank
        );
    }
    let json = serde_json::to_string_pretty(&result)?;
    match &args.out {
        Some(path) => {
            std::fs::write(path, &json)?;
            if !quiet {
                eprintln!("wrote {}", path.display());
            }
        }
        None => println!("{json}"),
    }
    Ok(())
}

fn cmd_benchmark(args: BenchmarkArgs, quiet: bool) -> anyhow::Result<()> {
    let text = std::fs::read_to_string(&args.config)?;
    let mut config: BenchmarkConfig = serde_json::from_str(&text)?;
    if let Ok(seed) = std::env::var("HPS_SEED") {
        config.root_seed = seed
            .parse()
            .map_err(|e| CoreError::InvalidParameter(format!("bad HPS_SEED: {e}")))?;
    }
    config.validate()?;
    let report = run_benchmark(&config)?;
    std::fs::create_dir_all(&args.out_dir)?;
    let table = args.out_dir.join("table.csv");
    let file = std::fs::File::create(&table)?;
    write_table_csv(&report.rows, std::io::BufWriter::new(file))?;
    std::fs::write(
        args.out_dir.join("summary.json"),
        serde_json::to_string_pretty(&report.aggregates)?,
    )?;
    if !quiet {
        eprintln!(
            "wrote {} rows to {} and summary.json",
            report.rows.len(),
            table.display()
        );
        for a in &report.aggregates {
            eprintln!(
                "  {} {}: consistent {:.1}%  e_m {:.3}%  e_C {:.3}%  e_J {:.3}%",
                a.algo, a.noise, a.consistent_pct, a.mean_e_m, a.mean_e_c, a.mean_e_j
            );
        }
    }
    Ok(())
}

fn load_labels(path: &PathBuf) -> anyhow::Result<Vec<u32>> {
    if path.extension().and_then(|e| e.to_str()) == Some("ply") {
        let cloud = PointCloud::load_ply(path)?;
        return cloud
            .labels()
            .map(|l| l.to_vec())
            .ok_or_else(|| anyhow::anyhow!(CoreError::Parse("PLY has no labels".into())));
    }
    let text = std::fs::read_to_string(path)?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    let arr = value
        .get("point_labels")
        .or_else(|| value.get("labels"))
        .or(Some(&value))
        .and_then(|v| v.as_array())
        .ok_or_else(|| anyhow::anyhow!(CoreError::Parse("no labels array found".into())))?;
    arr.iter()
        .map(|v| {
            v.as_u64()
                .map(|x| x as u32)
                .ok_or_else(|| anyhow::anyhow!(CoreError::Parse("non-integer label".into())))
        })
        .collect()
}

fn cmd_metrics(args: MetricsArgs, _quiet: bool) -> anyhow::Result<()> {
    let est_text = std::fs::read_to_string(&args.est)?;
    // accept either a bare InertialParams or a full identification result
    let est: InertialParams = serde_json::from_str::<InertialParams>(&est_text).or_else(|_| {
        serde_json::from_str::<hps_core::identify::IdentResult>(&est_text).map(|r| r.params)
    })?;
    let gt: InertialParams = serde_json::from_str(&std::fs::read_to_string(&args.gt)?)?;

    let extents = if let Some(s) = &args.bbox_extents {
        let parts: Vec<f64> = s
            .split(',')
            .map(|t| t.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| CoreError::InvalidParameter(format!("bad --bbox-extents: {e}")))?;
        if parts.len() != 3 {
            return Err(anyhow::anyhow!(CoreError::InvalidParameter(
                "--bbox-extents needs 3 values".into()
            )));
        }
        Vec3::new(parts[0], parts[1], parts[2])
    } else if let Some(mesh_path) = &args.mesh {
        let mesh = TriMesh::load_obj(mesh_path)?;
        let (lo, hi) = mesh.bounding_box();
        hi - lo
    } else {
        return Err(anyhow::anyhow!(CoreError::InvalidParameter(
            "one of --bbox-extents or --mesh is required".into()
        )));
    };

    let se = size_errors(&est, &gt, &extents, gt.mass);
    let e_rie = riemannian_error(&est, &gt).ok();
    let consistent = hps_core::inertia::is_consistent(&est);
    let mut row = serde_json::to_value(MetricRow {
        object: args.object.clone(),
        algo: args.algo.clone(),
        noise: args.noise.clone(),
        seed: 0,
        e_m: se.e_m,
        e_c_mean: se.e_c_mean,
        e_j_mean: se.e_j_mean,
        e_rie,
        consistent,
    })?;
    if let (Some(pred), Some(truth)) = (&args.pred_labels, &args.truth_labels) {
        let pred = load_labels(pred)?;
        let truth = load_labels(truth)?;
        let pair = SegPair::new(&pred, &truth)?;
        row["use"] = serde_json::json!(use_error(&pair));
        row["gce"] = serde_json::json!(gce(&pair));
    }
    println!("{}", serde_json::to_string(&row)?);
    Ok(())
}
