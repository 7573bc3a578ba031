//! Output files. JSON documents carry `"schema": 1`; CSV columns are fixed.
//!
//! * `report.json`: `{schema, config, problem, run, classification}`
//! * `path.csv`: `t, x1..xn, f` along the final path, `t` the normalized arc length
//! * `sweep.csv`: `R, theta, x1..xn, f, residual, branch` (`theta` empty off the plane, `branch` -1 when untracked)
//! * `clusters.json`: `{schema, field, dim, radii, method, clusters, fits, branches, ambiguities, plateau_radii}`
//! * `scoreboard.csv`: `item, c, verdict, oracle, gap, passed, detail`

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

use mountain_pass::classifier::Classification;
use mountain_pass::minimax::{Barrier, MinimaxRun, MountainPassProblem};
use mountain_pass::sweep::{ClusterReport, SweepTrace};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Serialize)]
pub struct ProblemSummary {
    pub field: String,
    pub dim: usize,
    pub smooth: bool,
    pub x_star: Vec<f64>,
    pub y_star: Vec<f64>,
    pub barrier: Barrier,
    pub boundary_min: f64,
    pub boundary_argmin: Vec<f64>,
}

impl ProblemSummary {
    pub fn new(p: &MountainPassProblem) -> Self {
        Self {
            field: p.field.name().to_string(),
            dim: p.dim(),
            smooth: p.field.is_smooth(),
            x_star: p.x_star.clone(),
            y_star: p.y_star.clone(),
            barrier: p.barrier.clone(),
            boundary_min: p.boundary_min,
            boundary_argmin: p.boundary_argmin.clone(),
        }
    }
}

#[derive(Serialize)]
struct SolveReport<'a, C: Serialize> {
    schema: u32,
    config: &'a C,
    problem: ProblemSummary,
    run: &'a MinimaxRun,
    classification: &'a Classification,
}

#[derive(Serialize)]
struct ClustersDoc<'a> {
    schema: u32,
    field: &'a str,
    dim: usize,
    radii: &'a [f64],
    method: String,
    clusters: &'a [mountain_pass::sweep::Cluster],
    fits: &'a [mountain_pass::sweep::BranchFit],
    branches: &'a [mountain_pass::sweep::Branch],
    ambiguities: &'a [(usize, usize)],
    plateau_radii: Vec<f64>,
}

fn create(dir: &Path, name: &str) -> Result<(PathBuf, BufWriter<File>)> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    Ok((path, BufWriter::new(file)))
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<PathBuf> {
    let (path, mut w) = create(dir, name)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(path)
}

/// Writes `report.json` and `path.csv`; returns their paths.
pub fn write_solve<C: Serialize>(
    dir: &Path,
    config: &C,
    run: &MinimaxRun,
    classification: &Classification,
) -> Result<Vec<PathBuf>> {
    let report = SolveReport {
        schema: SCHEMA_VERSION,
        config,
        problem: ProblemSummary::new(&run.problem),
        run,
        classification,
    };
    let mut out = vec![write_json(dir, "report.json", &report)?];
    if let Some(path) = run.last_path() {
        let (p, mut w) = create(dir, "path.csv")?;
        path.write_csv(&mut w)?;
        w.flush()?;
        out.push(p);
    }
    Ok(out)
}

/// Writes `sweep.csv` and `clusters.json`; returns their paths.
pub fn write_sweep(
    dir: &Path,
    field: &str,
    dim: usize,
    method: String,
    trace: &SweepTrace,
    report: &ClusterReport,
) -> Result<Vec<PathBuf>> {
    let (csv, mut w) = create(dir, "sweep.csv")?;
    mountain_pass::sweep::write_sweep_csv(&mut w, trace, report)?;
    w.flush()?;
    let doc = ClustersDoc {
        schema: SCHEMA_VERSION,
        field,
        dim,
        radii: &trace.radii,
        method,
        clusters: &report.clusters,
        fits: &report.fits,
        branches: &report.branches,
        ambiguities: &report.ambiguities,
        plateau_radii: trace.sweeps.iter().filter(|s| s.plateau).map(|s| s.r).collect(),
    };
    let json = write_json(dir, "clusters.json", &doc)?;
    Ok(vec![csv, json])
}

/// Writes `text` to `dir/name`.
pub fn write_text(dir: &Path, name: &str, text: &str) -> Result<PathBuf> {
    let (path, mut w) = create(dir, name)?;
    w.write_all(text.as_bytes())?;
    w.flush()?;
    Ok(path)
}
