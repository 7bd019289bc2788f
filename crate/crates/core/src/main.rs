use std::fs::File;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use npsg::data::{load_libsvm, LabelMap, ParseOptions};
use npsg::harness::{rate_fit_points, read_csv, run_to_directory, summarize, ExperimentConfig};
use npsg::schedules::{validate_schedule, Recursion, StepSchedule};
use npsg::{Error, Result};

#[derive(Parser)]
#[command(name = "npsg", version, about = "Projected subgradient experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment described by a TOML config.
    Run {
        config: PathBuf,
        /// Output directory; overrides the config's `output`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also run the inequality monitors and write monitors.json.
        #[arg(long)]
        monitors: bool,
    },
    /// Check a weight schedule against its recursion for t = 0..=t_max.
    ValidateSchedule {
        variant: Variant,
        t_max: usize,
        /// Exit nonzero when a violation is found.
        #[arg(long)]
        strict: bool,
    },
    /// Fit log(gap) against log(t) from a CSV written by `run`.
    RateFit {
        csv: PathBuf,
        #[arg(long)]
        fstar: f64,
        #[arg(long, num_args = 2, value_names = ["LO", "HI"])]
        window: Vec<usize>,
        /// Solver label; required when the file holds several.
        #[arg(long)]
        solver: Option<String>,
        /// Trial to fit (`avg` for the averaged file).
        #[arg(long, default_value = "avg")]
        trial: String,
        /// Fit the averaged-iterate column instead of the individual one.
        #[arg(long)]
        averaged: bool,
    },
    /// Parse a LIBSVM file.
    Parse {
        file: PathBuf,
        #[arg(long)]
        stats: bool,
        #[arg(long)]
        dimension: Option<usize>,
        /// Map class 2 to +1 and every other class to -1.
        #[arg(long)]
        covtype: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Variant {
    General,
    Strong,
    Fista,
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run {
            config,
            out,
            monitors,
        } => {
            let cfg = ExperimentConfig::load(&config)?;
            let dir = out.or_else(|| cfg.output.clone()).ok_or_else(|| {
                Error::Config("no output directory (set `output` or pass --out)".into())
            })?;
            let result = run_to_directory(&cfg, &dir, monitors)?;
            let summary = summarize(&result, cfg.budget);
            for s in &summary.solvers {
                println!(
                    "{:<20} t={:<8} output={:.6e} sparsity={:.2}%",
                    s.solver, s.final_t, s.final_output_objective, s.final_sparsity_pct
                );
            }
            println!("wrote {}", dir.display());
        }
        Command::ValidateSchedule {
            variant,
            t_max,
            strict,
        } => {
            let (schedule, recursion) = match variant {
                Variant::General => (StepSchedule::GeneralConvex, Recursion::General),
                Variant::Strong => (StepSchedule::StronglyConvex { mu: 1.0 }, Recursion::Strong),
                Variant::Fista => (StepSchedule::FistaTheta, Recursion::General),
            };
            let report = validate_schedule(&schedule, t_max, recursion);
            println!(
                "{schedule}: {} transitions, {} violations, max relative gap {:.3e}",
                report.transitions,
                report.violations.len(),
                report.max_rel_gap
            );
            for v in report.violations.iter().take(20) {
                println!(
                    "  violation at {} -> {}: lhs {} > rhs {}",
                    v.index - 1,
                    v.index,
                    v.lhs,
                    v.rhs
                );
            }
            if strict && !report.is_valid() {
                return Err(Error::Config("schedule violates its recursion".into()));
            }
        }
        Command::RateFit {
            csv,
            fstar,
            window,
            solver,
            trial,
            averaged,
        } => {
            let rows = read_csv(File::open(&csv).map_err(|e| Error::file(&csv, e))?)?;
            let mut labels: Vec<&str> = rows.iter().map(|r| r.solver.as_str()).collect();
            labels.dedup();
            let label = match (&solver, labels.as_slice()) {
                (Some(s), _) => s.as_str(),
                (None, [one]) => one,
                _ => {
                    return Err(Error::Config(
                        "several solvers in file; pass --solver".into(),
                    ))
                }
            };
            let pts: Vec<(usize, f64)> = rows
                .iter()
                .filter(|r| r.solver == label && r.trial == trial)
                .map(|r| {
                    (
                        r.row.t,
                        if averaged {
                            r.row.f_averaged
                        } else {
                            r.row.f_individual
                        },
                    )
                })
                .collect();
            let fit = rate_fit_points(&pts, fstar, window[0], window[1])?;
            println!(
                "slope {:.6} intercept {:.6} r2 {:.6} points {}",
                fit.slope, fit.intercept, fit.r2, fit.points
            );
        }
        Command::Parse {
            file,
            stats,
            dimension,
            covtype,
        } => {
            let opts = ParseOptions {
                labels: if covtype {
                    LabelMap::COVTYPE
                } else {
                    LabelMap::default()
                },
                dimension,
            };
            let ds = load_libsvm(&file, &opts)?;
            if stats {
                println!("{}", serde_json::to_string_pretty(&ds.stats())?);
            } else {
                println!("{} rows, dimension {}", ds.len(), ds.dimension());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("npsg: error: {e}");
            ExitCode::FAILURE
        }
    }
}
