//! Multi-trial experiments, CSV output and rate fitting.

mod config;
mod rate;

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

pub use config::{ExperimentConfig, LabelSpec, ProblemSpec, Tolerances};
pub use rate::{rate_fit, rate_fit_points, Column, RateFit, MIN_FIT_POINTS};

use crate::error::{Error, Result};
use crate::linalg::Vector;
use crate::oracle::Sampling;
use crate::problems::Composite;
use crate::solvers::{run_solver_observed, RunOptions, SolverConfig, SolverKind};
use crate::trace::{Trace, TraceRow};
use crate::verify::{
    run_monitored, AverageIdentityMonitor, Eq7Monitor, FeasibilityMonitor, Lemma2Monitor, Monitor,
    MonitorReport, SmoothBoundMonitor, ZIdentityMonitor,
};

pub const CSV_HEADER: [&str; 7] = [
    "solver",
    "trial",
    "t",
    "f_individual",
    "f_averaged",
    "sparsity_pct",
    "wall_ns",
];

#[derive(Debug, Clone, PartialEq)]
pub struct SolverResult {
    pub label: String,
    pub kind: SolverKind,
    pub trials: Vec<Trace>,
    pub mean: Trace,
    /// Reported output vector of every trial.
    pub outputs: Vec<Vector>,
}

impl SolverResult {
    /// Final objective of the reported output, averaged over trials.
    pub fn final_objective(&self) -> Option<f64> {
        let last = self.mean.last()?;
        Some(if self.kind.reports_average() {
            last.f_averaged
        } else {
            last.f_individual
        })
    }

    pub fn final_sparsity(&self) -> Option<f64> {
        self.mean.last().map(|r| r.sparsity_pct)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub solvers: Vec<SolverResult>,
    pub fstar: Option<f64>,
    /// Whether `fstar` is an estimate rather than a known optimum.
    pub fstar_estimated: bool,
}

/// Runs every solver for `cfg.trials` trials with seeds `seed + i`.
///
/// Trials run in parallel and are merged by index, so the result does not
/// depend on scheduling.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let problem = cfg.problem.build()?;
    run_experiment_on(cfg, &problem)
}

pub fn run_experiment_on(cfg: &ExperimentConfig, problem: &Composite) -> Result<ExperimentResult> {
    for s in &cfg.solvers {
        s.resolve(problem)?;
    }
    let dim = problem.dim();
    let mut solvers = Vec::with_capacity(cfg.solvers.len());
    for solver in &cfg.solvers {
        let runs: Vec<(Trace, Vector)> = (0..cfg.trials)
            .into_par_iter()
            .map(|i| {
                let out = run_solver_observed(solver, problem, &cfg.run_options(dim, i), &mut ())?;
                Ok((out.trace, out.output))
            })
            .collect::<Result<_>>()?;
        let (trials, outputs): (Vec<_>, Vec<_>) = runs.into_iter().unzip();
        solvers.push(SolverResult {
            label: solver.label(),
            kind: solver.kind,
            mean: Trace::mean(&trials)?,
            trials,
            outputs,
        });
    }
    let (fstar, estimated) = match problem.fstar {
        Some(f) => (Some(f), false),
        None => (Some(estimate_fstar(cfg, problem, &solvers)?), true),
    };
    Ok(ExperimentResult {
        solvers,
        fstar,
        fstar_estimated: estimated,
    })
}

/// Best objective seen over every solver and trial, optionally including a
/// ten-times-longer run of the first solver.
fn estimate_fstar(
    cfg: &ExperimentConfig,
    problem: &Composite,
    solvers: &[SolverResult],
) -> Result<f64> {
    let mut best = solvers
        .iter()
        .flat_map(|s| s.trials.iter())
        .flat_map(|t| t.rows().iter())
        .flat_map(|r| [r.f_individual, r.f_averaged])
        .fold(f64::INFINITY, f64::min);
    if cfg.reference_run {
        let opts = RunOptions {
            budget: cfg.budget.saturating_mul(10),
            ..cfg.run_options(problem.dim(), 0)
        };
        let out = run_solver_observed(&cfg.solvers[0], problem, &opts, &mut ())?;
        for r in out.trace.rows() {
            best = best.min(r.f_individual).min(r.f_averaged);
        }
    }
    Ok(best)
}

fn fmt_num(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_row<W: Write>(
    w: &mut csv::Writer<W>,
    label: &str,
    trial: &str,
    r: &TraceRow,
) -> Result<()> {
    w.write_record([
        label,
        trial,
        &r.t.to_string(),
        &fmt_num(r.f_individual),
        &fmt_num(r.f_averaged),
        &fmt_num(r.sparsity_pct),
        &r.wall_ns.to_string(),
    ])?;
    Ok(())
}

/// Per-trial rows with the trial index in the `trial` column.
pub fn write_trials_csv<W: Write>(result: &ExperimentResult, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for s in &result.solvers {
        for (i, trace) in s.trials.iter().enumerate() {
            for r in trace.rows() {
                write_row(&mut w, &s.label, &i.to_string(), r)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Trial-averaged rows with `trial=avg`.
pub fn write_averaged_csv<W: Write>(result: &ExperimentResult, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for s in &result.solvers {
        for r in s.mean.rows() {
            write_row(&mut w, &s.label, "avg", r)?;
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub solver: String,
    pub trial: String,
    pub row: TraceRow,
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<CsvRow>> {
    let mut rdr = csv::Reader::from_reader(input);
    let header = rdr.headers()?.clone();
    if header.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(Error::Config(format!("unexpected CSV header {header:?}")));
    }
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let bad = |field: &str| Error::Parse {
            line: i + 2,
            message: format!("bad {field}"),
        };
        let num = |k: usize, name: &str| rec[k].parse::<f64>().map_err(|_| bad(name));
        rows.push(CsvRow {
            solver: rec[0].to_string(),
            trial: rec[1].to_string(),
            row: TraceRow {
                t: rec[2].parse().map_err(|_| bad("t"))?,
                f_individual: num(3, "f_individual")?,
                f_averaged: num(4, "f_averaged")?,
                sparsity_pct: num(5, "sparsity_pct")?,
                wall_ns: rec[6].parse().map_err(|_| bad("wall_ns"))?,
            },
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverSummary {
    pub solver: String,
    pub final_t: usize,
    pub final_individual: f64,
    pub final_averaged: f64,
    pub final_output_objective: f64,
    pub final_sparsity_pct: f64,
    pub rate_fit: Option<RateFit>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub fstar: Option<f64>,
    pub fstar_estimated: bool,
    pub solvers: Vec<SolverSummary>,
}

/// Final values per solver; rate fits over the upper two decades of `t` when
/// enough points are available.
pub fn summarize(result: &ExperimentResult, budget: usize) -> Summary {
    let lo = (budget / 100).max(1);
    let solvers = result
        .solvers
        .iter()
        .filter_map(|s| {
            let last = s.mean.last()?;
            Some(SolverSummary {
                solver: s.label.clone(),
                final_t: last.t,
                final_individual: last.f_individual,
                final_averaged: last.f_averaged,
                final_output_objective: s.final_objective()?,
                final_sparsity_pct: last.sparsity_pct,
                rate_fit: result
                    .fstar
                    .and_then(|f| rate_fit(&s.mean, f, lo, budget, Column::Individual).ok()),
            })
        })
        .collect();
    Summary {
        fstar: result.fstar,
        fstar_estimated: result.fstar_estimated,
        solvers,
    }
}

/// Monitors that apply to `solver` on `problem`.
pub fn monitors_for(solver: &SolverConfig, problem: &Composite, tol: f64) -> Vec<Box<dyn Monitor>> {
    let mut out: Vec<Box<dyn Monitor>> = vec![Box::new(FeasibilityMonitor::new(1e-10))];
    let known = problem.wstar.clone().zip(problem.fstar);
    match solver.kind {
        SolverKind::NesterovPsg
        | SolverKind::NesterovPsgStrong
        | SolverKind::Srsg
        | SolverKind::SrsgStrong => {
            out.push(Box::new(ZIdentityMonitor::new(tol)));
        }
        SolverKind::SmoothAccelerated => out.push(Box::new(ZIdentityMonitor::new(tol))),
        SolverKind::QuasiMonotoneDa
        | SolverKind::PaPsg
        | SolverKind::PaPsgStrong
        | SolverKind::PaPsgRegularized => {
            out.push(Box::new(AverageIdentityMonitor::new(tol)));
        }
        _ => {}
    }
    if let Some((wstar, fstar)) = known {
        match solver.kind {
            SolverKind::NesterovPsg | SolverKind::Srsg if problem.regularizer.is_zero() => {
                if let Some(m) = problem.lipschitz {
                    out.push(Box::new(Lemma2Monitor::new(wstar, fstar, m, tol)));
                }
            }
            SolverKind::Psg | SolverKind::PsgStochastic => {
                out.push(Box::new(Eq7Monitor::new(wstar, fstar, tol)));
            }
            SolverKind::SmoothAccelerated => {
                if let Ok(r) = solver.resolve(problem) {
                    out.push(Box::new(SmoothBoundMonitor::new(
                        wstar,
                        fstar,
                        r.smoothness,
                        tol,
                    )));
                }
            }
            _ => {}
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonitorSection {
    pub solver: String,
    pub reports: Vec<MonitorReport>,
}

/// One deterministic monitored run per solver, with the base seed.
pub fn run_monitors(cfg: &ExperimentConfig, problem: &Composite) -> Result<Vec<MonitorSection>> {
    cfg.solvers
        .par_iter()
        .map(|s| {
            let opts = RunOptions {
                sampling: Sampling::Deterministic,
                ..cfg.run_options(problem.dim(), 0)
            };
            let reports = run_monitored(
                s,
                problem,
                &opts,
                monitors_for(s, problem, cfg.tolerances.identity),
            )?;
            Ok(MonitorSection {
                solver: s.label(),
                reports,
            })
        })
        .collect()
}

/// Writes the resolved config, both CSV files and a JSON summary into `dir`;
/// with `monitors`, also `monitors.json`.
pub fn run_to_directory(
    cfg: &ExperimentConfig,
    dir: &Path,
    monitors: bool,
) -> Result<ExperimentResult> {
    let problem = cfg.problem.build()?;
    for s in &cfg.solvers {
        s.resolve(&problem)?;
    }
    fs::create_dir_all(dir).map_err(|e| Error::file(dir, e))?;
    let write = |name: &str, bytes: &[u8]| -> Result<()> {
        let p = dir.join(name);
        fs::write(&p, bytes).map_err(|e| Error::file(&p, e))
    };
    write("config.resolved.toml", cfg.to_toml()?.as_bytes())?;
    let result = run_experiment_on(cfg, &problem)?;
    let mut buf = Vec::new();
    write_trials_csv(&result, &mut buf)?;
    write("trials.csv", &buf)?;
    buf.clear();
    write_averaged_csv(&result, &mut buf)?;
    write("averaged.csv", &buf)?;
    write(
        "summary.json",
        serde_json::to_string_pretty(&summarize(&result, cfg.budget))?.as_bytes(),
    )?;
    if monitors {
        let sections = run_monitors(cfg, &problem)?;
        write(
            "monitors.json",
            serde_json::to_string_pretty(&sections)?.as_bytes(),
        )?;
    }
    Ok(result)
}
