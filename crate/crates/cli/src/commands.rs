use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use anyhow::{bail, ensure, Context, Result};
use serde::Deserialize;
use serde_json::json;
use su2dp::export::{
    write_metric_csv, write_oracle_csv, write_trajectory_csv, write_values_csv, MeshParams,
};
use su2dp::lie::{exp_map, AlgebraVector, SystemSpec};
use su2dp::mesh::SimplicialMesh;
use su2dp::oracle::{axis_probes, brute_force_min_time, OracleConfig, OracleError};
use su2dp::solver::{local_timestep, solve_min_time, value_iteration, SolverConfig, ValueField};
use su2dp::trajectory::simulate;

use crate::args::{OracleArgs, ProbeSet, SolveArgs, SystemArgs, SystemName, TrajectoryArgs};
use crate::manifest::{NamedPoint, RunConfig, RunManifest, MANIFEST_FILE};

const DEFAULT_LAMBDA: f64 = 0.5;

/// How a successful command ended.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Ok,
    NotConverged,
}

pub fn resolve_system(args: &SystemArgs) -> Result<SystemSpec> {
    let mut spec = match &args.spec_file {
        Some(path) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading spec file {}", path.display()))?;
            serde_json::from_str::<SystemSpec>(&text)
                .with_context(|| format!("parsing spec file {}", path.display()))?
        }
        None => match args.system {
            SystemName::Eq27 => SystemSpec::eq27(DEFAULT_LAMBDA),
            SystemName::Example31 => SystemSpec::example31(args.vbound, DEFAULT_LAMBDA),
        },
    };
    if let Some(lambda) = args.lambda {
        spec.lambda = lambda;
    }
    ensure!(
        spec.lambda.is_finite() && spec.lambda >= 0.0,
        "lambda must be finite and nonnegative, got {}",
        spec.lambda
    );
    spec.validate()?;
    Ok(spec)
}

pub fn parse_point(text: &str) -> Result<AlgebraVector> {
    let parts: Vec<f64> = text
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .with_context(|| format!("start point {text:?} is not three numbers"))?;
    let [x, y, z] = parts[..] else {
        bail!("start point {text:?} must have three coordinates");
    };
    Ok(AlgebraVector::new(x, y, z))
}

fn probe_points(start: Option<&str>, probes: Option<ProbeSet>) -> Result<Vec<NamedPoint>> {
    match (start, probes) {
        (Some(s), _) => Ok(vec![NamedPoint {
            name: "start".into(),
            chart: parse_point(s)?,
        }]),
        (None, Some(ProbeSet::Axes)) => Ok(axis_probes()
            .into_iter()
            .map(|p| {
                let (axis, r) = ["x", "y", "z"]
                    .into_iter()
                    .zip(p.as_array())
                    .find(|(_, c)| *c != 0.0)
                    .expect("axis probes are off the origin");
                NamedPoint {
                    name: format!("{axis}{r}"),
                    chart: p,
                }
            })
            .collect()),
        (None, None) => bail!("give either --start or --probes"),
    }
}

pub fn solve_config(args: &SolveArgs) -> Result<RunConfig> {
    let system = resolve_system(&args.system)?;
    let mut solver = if system.lambda > 0.0 {
        SolverConfig::discounted(&system, system.lambda)?
    } else {
        SolverConfig::min_time()
    };
    solver = solver
        .with_control_samples(args.controls)
        .with_eps(args.eps)
        .with_max_iters(args.max_iters);
    if let Some(cap) = args.vcap {
        solver.v_cap = cap;
        solver.init_value = cap;
    }
    solver.validate()?;
    Ok(RunConfig::Solve {
        system,
        mesh: MeshParams {
            rho: args.rho,
            target_radius: args.rt,
            h: args.h,
        },
        solver,
    })
}

pub fn oracle_config(args: &OracleArgs) -> Result<RunConfig> {
    let system = resolve_system(&args.system)?;
    let mut oracle = OracleConfig::for_system(&system, args.dt)?;
    oracle.control_samples = args.controls;
    oracle.t_max = args.tmax;
    if let Some(q) = args.quant {
        oracle.quantization = q;
    }
    Ok(RunConfig::Oracle {
        system,
        oracle,
        target_radius: args.rt,
        probes: probe_points(args.start.as_deref(), args.probes)?,
    })
}

pub fn trajectory_config(args: &TrajectoryArgs) -> Result<RunConfig> {
    ensure!(args.max_steps > 0, "--max-steps must be positive");
    let field = fs::canonicalize(&args.field)
        .with_context(|| format!("field directory {}", args.field.display()))?;
    Ok(RunConfig::Trajectory {
        field,
        starts: probe_points(args.start.as_deref(), args.probes)?,
        max_steps: args.max_steps,
    })
}

pub fn run(config: RunConfig, out: &Path) -> Result<Status> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    match &config {
        RunConfig::Solve { .. } => run_solve(config, out),
        RunConfig::Trajectory { .. } => run_trajectory(config, out),
        RunConfig::Oracle { .. } => run_oracle(config, out),
    }
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    let path = dir.join(name);
    Ok(BufWriter::new(
        File::create(&path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

fn run_solve(config: RunConfig, out: &Path) -> Result<Status> {
    let RunConfig::Solve {
        system,
        mesh: params,
        solver,
    } = &config
    else {
        unreachable!()
    };
    let mut manifest = RunManifest::new(config.clone());

    let clock = Instant::now();
    let mesh = SimplicialMesh::triangulate_ball(params.rho, params.target_radius, params.h)?;
    manifest
        .timings
        .insert("mesh".into(), clock.elapsed().as_secs_f64());

    let clock = Instant::now();
    let field = if system.lambda > 0.0 {
        value_iteration(&mesh, system, solver)?
    } else {
        solve_min_time(&mesh, system, solver)?
    };
    manifest
        .timings
        .insert("solve".into(), clock.elapsed().as_secs_f64());

    let mut w = create(out, "values.csv")?;
    write_values_csv(&mut w, &mesh, &field.values)?;
    w.flush()?;
    let mut w = create(out, "metric.csv")?;
    write_metric_csv(&mut w, &field.metric_history)?;
    w.flush()?;

    manifest.summary = json!({
        "vertex_count": mesh.vertex_count(),
        "simplex_count": mesh.simplex_count(),
        "dt": field.dt,
        "iterations": field.iterations,
        "converged": field.converged,
        "residual": field.residual,
        "values": if system.lambda > 0.0 { "discounted cost" } else { "minimum time" },
    });
    manifest.files = vec!["values.csv".into(), "metric.csv".into()];
    manifest.write(out)?;

    println!(
        "{} vertices, {} sweeps, residual {:.3e}{}",
        mesh.vertex_count(),
        field.iterations,
        field.residual,
        if field.converged {
            ""
        } else {
            " (not converged)"
        }
    );
    Ok(if field.converged {
        Status::Ok
    } else {
        Status::NotConverged
    })
}

#[derive(Deserialize)]
struct ValueRow {
    value: f64,
}

/// Rebuilds the mesh and field written by a solve into `dir`.
fn load_field(dir: &Path) -> Result<(SystemSpec, SimplicialMesh, SolverConfig, ValueField)> {
    let manifest = RunManifest::read(&dir.join(MANIFEST_FILE))?;
    let RunConfig::Solve {
        system,
        mesh: params,
        solver,
    } = manifest.run
    else {
        bail!("{} does not hold a solve", dir.display());
    };
    let mesh = SimplicialMesh::triangulate_ball(params.rho, params.target_radius, params.h)?;
    let path = dir.join("values.csv");
    let mut reader =
        csv::Reader::from_path(&path).with_context(|| format!("opening {}", path.display()))?;
    let values: Vec<f64> = reader
        .deserialize::<ValueRow>()
        .map(|r| r.map(|row| row.value))
        .collect::<Result<_, _>>()
        .with_context(|| format!("reading {}", path.display()))?;
    ensure!(
        values.len() == mesh.vertex_count(),
        "{} has {} rows but the mesh has {} vertices",
        path.display(),
        values.len(),
        mesh.vertex_count()
    );
    let field = ValueField {
        values,
        metric_history: Vec::new(),
        iterations: manifest.summary["iterations"].as_u64().unwrap_or(0) as usize,
        converged: manifest.summary["converged"].as_bool().unwrap_or(false),
        residual: manifest.summary["residual"].as_f64().unwrap_or(f64::NAN),
        h: params.h,
        lambda: system.lambda,
        dt: local_timestep(&system, params.h)?,
    };
    Ok((system, mesh, solver, field))
}

fn run_trajectory(config: RunConfig, out: &Path) -> Result<Status> {
    let RunConfig::Trajectory {
        field: dir,
        starts,
        max_steps,
    } = &config
    else {
        unreachable!()
    };
    let mut manifest = RunManifest::new(config.clone());
    let clock = Instant::now();
    let (system, mesh, solver, field) = load_field(dir)?;
    manifest
        .timings
        .insert("load".into(), clock.elapsed().as_secs_f64());

    for start in starts {
        ensure!(
            mesh.locate(&start.chart).is_ok(),
            "start {:?} lies outside the meshed region",
            start.chart
        );
    }
    let clock = Instant::now();
    let mut summary = Vec::new();
    for start in starts {
        let record = simulate(
            &mesh,
            &system,
            &solver,
            &field,
            &exp_map(&start.chart),
            *max_steps,
        )?;
        let name = format!("traj_{}.csv", start.name);
        let mut w = create(out, &name)?;
        write_trajectory_csv(&mut w, &record, system.control_dim())?;
        w.flush()?;
        summary.push(json!({
            "name": start.name,
            "file": name,
            "samples": record.samples.len(),
            "total_time": record.total_time,
            "reached_target": record.reached_target,
            "left_domain": record.left_domain,
        }));
        manifest.files.push(name);
    }
    manifest
        .timings
        .insert("simulate".into(), clock.elapsed().as_secs_f64());
    manifest.summary = json!(summary);
    manifest.write(out)?;
    println!("{} trajectories written to {}", starts.len(), out.display());
    Ok(Status::Ok)
}

fn run_oracle(config: RunConfig, out: &Path) -> Result<Status> {
    let RunConfig::Oracle {
        system,
        oracle,
        target_radius,
        probes,
    } = &config
    else {
        unreachable!()
    };
    let mut manifest = RunManifest::new(config.clone());
    let clock = Instant::now();
    let mut rows = Vec::new();
    for probe in probes {
        let t = match brute_force_min_time(system, &exp_map(&probe.chart), *target_radius, oracle) {
            Ok(t) => t,
            Err(OracleError::Unreachable(_)) => f64::INFINITY,
            Err(e) => return Err(e.into()),
        };
        rows.push((probe.chart, t));
    }
    manifest
        .timings
        .insert("search".into(), clock.elapsed().as_secs_f64());
    let mut w = create(out, "oracle.csv")?;
    write_oracle_csv(&mut w, &rows)?;
    w.flush()?;
    manifest.files = vec!["oracle.csv".into()];
    manifest.summary = json!({ "probes": rows.len() });
    manifest.write(out)?;
    println!(
        "{} probes written to {}",
        rows.len(),
        out.join("oracle.csv").display()
    );
    Ok(Status::Ok)
}
