//! Manufactured-solution runs, mesh convergence studies and their output
//! files.
//!
//! A run starts from the analytic steady state, steps to numerical steady
//! state and measures how far it drifted. Files written to the output
//! directory:
//!
//! - `history.csv`: `step,time,gmres_iterations,gmres_residual,max_change,error,sqrt_error`
//! - `T_final.dat`, `error_map.dat` (and `beta.dat` on request): field dumps
//! - `trace_<k>.csv`: `t,x,y,bmag` along the line through each trace point
//! - `convergence.csv` (studies): `mesh,error,sqrt_error,order,gmres_mean,walltime_s`

mod config;

pub use config::{RunConfig, SourceSampling, KEYS};

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use crate::beta::{self, BetaField};
use crate::error::{Error, Result};
use crate::field::{l2_error, write_field, FieldRole, L2Error, Mesh2D, ScalarField2D};
use crate::magnetics::LineParam;
use crate::propagators::{line_through, LineSamples};
use crate::stepper::{Scheme, StepReport, Stepper};

#[derive(Debug, Clone, PartialEq)]
pub struct HistoryRow {
    pub step: usize,
    pub time: f64,
    pub gmres_iterations: usize,
    pub gmres_residual: f64,
    pub max_change: f64,
    pub error: L2Error,
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub mesh: usize,
    pub steps: usize,
    pub error: L2Error,
    pub gmres_mean: f64,
    pub gmres_max: usize,
    pub walltime_s: f64,
    /// Picard sweeps for `beta` (schemes that use it).
    pub beta_iterations: Option<usize>,
    /// Nodes where the manufactured source is singular.
    pub singular_nodes: usize,
    pub temperature: ScalarField2D,
    /// `|T - T_inf|` per node.
    pub error_map: ScalarField2D,
    pub history: Vec<HistoryRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub mesh: usize,
    pub error: L2Error,
    /// Against the previous row that completed; `None` on the first.
    pub order: Option<f64>,
    pub gmres_mean: f64,
    pub walltime_s: f64,
}

#[derive(Debug)]
pub struct StudyOutcome {
    pub rows: Vec<ConvergenceRow>,
    /// Meshes whose run failed; they have no row.
    pub failures: Vec<(usize, Error)>,
}

/// Observed order between two meshes from the l2 norms.
pub fn observed_order(coarse: (usize, f64), fine: (usize, f64)) -> f64 {
    (coarse.1 / fine.1).ln() / (fine.0 as f64 / coarse.0 as f64).ln()
}

/// `|a - b|` per node.
pub fn error_map(t: &ScalarField2D, reference: &ScalarField2D) -> Result<ScalarField2D> {
    if t.mesh() != reference.mesh() {
        return Err(Error::Config("error map: fields live on different meshes".into()));
    }
    let v = t
        .values()
        .iter()
        .zip(reference.values())
        .map(|(a, b)| (a - b).abs())
        .collect();
    ScalarField2D::from_values(*t.mesh(), v, FieldRole::Error)
}

fn line_param(scheme: Scheme) -> LineParam {
    match scheme {
        Scheme::Tokamak => LineParam::ArcLength,
        _ => LineParam::Lambda,
    }
}

fn write_history(path: &Path, rows: &[HistoryRow]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(
        w,
        "step,time,gmres_iterations,gmres_residual,max_change,error,sqrt_error"
    )?;
    for r in rows {
        writeln!(
            w,
            "{},{:.17e},{},{:.17e},{:.17e},{:.17e},{:.17e}",
            r.step, r.time, r.gmres_iterations, r.gmres_residual, r.max_change, r.error.squared, r.error.norm
        )?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_convergence(path: &Path, rows: &[ConvergenceRow]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "mesh,error,sqrt_error,order,gmres_mean,walltime_s")?;
    for r in rows {
        let order = r.order.map_or(String::new(), |o| format!("{o:.6}"));
        writeln!(
            w,
            "{},{:.17e},{:.17e},{},{:.3},{:.3}",
            r.mesh, r.error.squared, r.error.norm, order, r.gmres_mean, r.walltime_s
        )?;
    }
    w.flush()?;
    Ok(())
}

fn write_traces(cfg: &RunConfig, mesh: Mesh2D, dir: &Path) -> Result<()> {
    let model = cfg.case().model();
    let param = line_param(cfg.solver.scheme);
    for (k, &(x, y)) in cfg.trace_points.iter().enumerate() {
        let line = line_through(
            &model,
            param,
            x,
            y,
            mesh.min_spacing(),
            &cfg.solver.lines,
            f64::INFINITY,
        )?
        .ok_or(Error::NullPoint {
            x,
            y,
            bmag: model.eval_b(x, y).bmag,
        })?;
        let t: Vec<f64> = match &line {
            LineSamples::Closed(o) => (0..o.len()).map(|i| i as f64 * o.step()).collect(),
            LineSamples::Open(o) => o.t.clone(),
        };
        let mut w = BufWriter::new(File::create(dir.join(format!("trace_{k}.csv")))?);
        writeln!(w, "t,x,y,bmag")?;
        for i in 0..t.len() {
            writeln!(
                w,
                "{:.17e},{:.17e},{:.17e},{:.17e}",
                t[i],
                line.x()[i],
                line.y()[i],
                line.bmag()[i]
            )?;
        }
        w.flush()?;
    }
    Ok(())
}

/// Runs one mesh (`cfg.mesh`) and writes its files to `dir`. On a solver
/// failure the history so far and the last temperature are still written.
pub fn run_single_in(cfg: &RunConfig, dir: &Path) -> Result<RunSummary> {
    cfg.validate()?;
    fs::create_dir_all(dir)?;
    let start = Instant::now();
    let case = cfg.case();
    let model = case.model();
    let mesh = Mesh2D::square(cfg.mesh)?;
    let sc = &cfg.solver;
    let b_min = sc.lines.b_min;
    write_traces(cfg, mesh, dir)?;

    let beta: Option<BetaField> = match sc.scheme {
        Scheme::Tokamak => None,
        _ => Some(beta::solve_beta(
            &model,
            mesh,
            sc.dt,
            sc.eps,
            sc.beta_tol,
            sc.beta_max_iter,
            &sc.lines,
        )?),
    };
    let beta_iterations = beta.as_ref().map(|b| b.iterations);
    if let (true, Some(b)) = (cfg.dump_beta, &beta) {
        write_field(&dir.join("beta.dat"), &b.field)?;
    }
    let exact = move |x: f64, y: f64| case.source(x, y, b_min).unwrap_or_else(|_| case.isotropic_source(x, y));
    let sampled: Option<&(dyn Fn(f64, f64) -> f64 + Sync)> = match (cfg.source, sc.scheme) {
        (SourceSampling::Lines, Scheme::ArbitraryB | Scheme::Tokamak) => Some(&exact),
        _ => None,
    };
    let mut stepper = Stepper::with_line_source(&model, mesh, sc, beta, sampled)?;
    let t_inf = case.temperature_field(mesh);
    let (source, singular_nodes) = case.source_field(mesh, b_min)?;
    log::info!(
        "mesh {}: {} scheme, delta {}, b0 {}, eps {:e}, setup {:.2} s",
        cfg.mesh,
        sc.scheme.name(),
        cfg.delta,
        cfg.b0,
        sc.eps,
        start.elapsed().as_secs_f64()
    );

    let mut t = t_inf.clone();
    let mut history = Vec::with_capacity(sc.steps);
    let dt = sc.dt;
    let outcome = stepper.run(&mut t, &source, sc.steps, sc.steady_tol, |n, t, rep: &StepReport| {
        let error = l2_error(t, &t_inf)?;
        log::info!(
            "step {n} t {:.4e} gmres {} residual {:.3e} max|dT| {:.3e} error {:.6e}",
            n as f64 * dt,
            rep.gmres.iterations,
            rep.gmres.residual,
            rep.max_change,
            error.norm
        );
        history.push(HistoryRow {
            step: n,
            time: n as f64 * dt,
            gmres_iterations: rep.gmres.iterations,
            gmres_residual: rep.gmres.residual,
            max_change: rep.max_change,
            error,
        });
        Ok(())
    });
    write_history(&dir.join("history.csv"), &history)?;
    write_field(&dir.join("T_final.dat"), &t)?;
    let emap = error_map(&t, &t_inf)?;
    write_field(&dir.join("error_map.dat"), &emap)?;
    let steps = outcome?;
    let error = l2_error(&t, &t_inf)?;
    let gmres_total: usize = history.iter().map(|r| r.gmres_iterations).sum();
    let summary = RunSummary {
        mesh: cfg.mesh,
        steps,
        error,
        gmres_mean: if steps > 0 {
            gmres_total as f64 / steps as f64
        } else {
            0.0
        },
        gmres_max: history.iter().map(|r| r.gmres_iterations).max().unwrap_or(0),
        walltime_s: start.elapsed().as_secs_f64(),
        beta_iterations,
        singular_nodes,
        temperature: t,
        error_map: emap,
        history,
    };
    log::info!(
        "mesh {}: {} steps, error {:.6e} (sqrt {:.6e}), mean gmres {:.1}, {:.2} s",
        summary.mesh,
        summary.steps,
        summary.error.squared,
        summary.error.norm,
        summary.gmres_mean,
        summary.walltime_s
    );
    Ok(summary)
}

/// [`run_single_in`] writing to `cfg.output_dir`.
pub fn run_single(cfg: &RunConfig) -> Result<RunSummary> {
    run_single_in(cfg, &cfg.output_dir)
}

/// Runs every mesh in `cfg.meshes` (files in `mesh_<n>/` subdirectories)
/// and writes `convergence.csv`. Failed meshes are logged and skipped.
pub fn run_convergence(cfg: &RunConfig) -> Result<StudyOutcome> {
    cfg.validate()?;
    fs::create_dir_all(&cfg.output_dir)?;
    let mut rows: Vec<ConvergenceRow> = Vec::new();
    let mut failures = Vec::new();
    for &n in &cfg.meshes {
        let mut c = cfg.clone();
        c.mesh = n;
        match run_single_in(&c, &cfg.output_dir.join(format!("mesh_{n}"))) {
            Ok(s) => {
                let order = rows
                    .last()
                    .map(|p| observed_order((p.mesh, p.error.norm), (n, s.error.norm)));
                rows.push(ConvergenceRow {
                    mesh: n,
                    error: s.error,
                    order,
                    gmres_mean: s.gmres_mean,
                    walltime_s: s.walltime_s,
                });
            }
            Err(e @ Error::Config(_)) => return Err(e),
            Err(e) => {
                log::error!("mesh {n} failed: {e}");
                failures.push((n, e));
            }
        }
        write_convergence(&cfg.output_dir.join("convergence.csv"), &rows)?;
    }
    Ok(StudyOutcome { rows, failures })
}
