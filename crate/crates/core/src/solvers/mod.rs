//! Solver catalogue and the run loop.

mod steps;

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

pub use steps::*;

use crate::error::{require_dim, require_positive, Error, Result};
use crate::geometry::{check_supported, Regularizer};
use crate::linalg::{sparsity_pct, Vector};
use crate::oracle::{trial_rng, Sampling};
use crate::problems::Composite;
use crate::schedules::StepSchedule;
use crate::trace::{Trace, TraceRow};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverKind {
    Psg,
    PsgStochastic,
    NesterovPsg,
    NesterovPsgStrong,
    Srsg,
    SrsgStrong,
    QuasiMonotoneDa,
    PaPsg,
    PaPsgStrong,
    PaPsgRegularized,
    Comid,
    Pegasos,
    SmoothAccelerated,
}

impl SolverKind {
    pub const ALL: [SolverKind; 13] = [
        SolverKind::Psg,
        SolverKind::PsgStochastic,
        SolverKind::NesterovPsg,
        SolverKind::NesterovPsgStrong,
        SolverKind::Srsg,
        SolverKind::SrsgStrong,
        SolverKind::QuasiMonotoneDa,
        SolverKind::PaPsg,
        SolverKind::PaPsgStrong,
        SolverKind::PaPsgRegularized,
        SolverKind::Comid,
        SolverKind::Pegasos,
        SolverKind::SmoothAccelerated,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            SolverKind::Psg => "psg",
            SolverKind::PsgStochastic => "psg-stochastic",
            SolverKind::NesterovPsg => "nesterov-psg",
            SolverKind::NesterovPsgStrong => "nesterov-psg-strong",
            SolverKind::Srsg => "srsg",
            SolverKind::SrsgStrong => "srsg-strong",
            SolverKind::QuasiMonotoneDa => "quasi-monotone-da",
            SolverKind::PaPsg => "pa-psg",
            SolverKind::PaPsgStrong => "pa-psg-strong",
            SolverKind::PaPsgRegularized => "pa-psg-regularized",
            SolverKind::Comid => "comid",
            SolverKind::Pegasos => "pegasos",
            SolverKind::SmoothAccelerated => "smooth-accelerated",
        }
    }

    pub fn needs_mu(&self) -> bool {
        matches!(self, SolverKind::NesterovPsgStrong | SolverKind::SrsgStrong)
    }

    /// Solvers whose step includes the exact prox of `r`.
    pub fn handles_regularizer(&self) -> bool {
        matches!(
            self,
            SolverKind::Srsg
                | SolverKind::SrsgStrong
                | SolverKind::PaPsgRegularized
                | SolverKind::Comid
        )
    }

    fn uses_averaging(&self) -> bool {
        matches!(
            self,
            SolverKind::QuasiMonotoneDa
                | SolverKind::PaPsg
                | SolverKind::PaPsgStrong
                | SolverKind::PaPsgRegularized
        )
    }

    /// Whether the solver's output is the uniform running average rather than
    /// the last iterate.
    pub fn reports_average(&self) -> bool {
        matches!(self, SolverKind::Comid)
    }

    fn always_deterministic(&self) -> bool {
        matches!(self, SolverKind::Psg | SolverKind::SmoothAccelerated)
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SolverKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown solver {s:?}")))
    }
}

/// Weight sequence for the averaging methods.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case")]
pub enum Weight {
    /// `c`
    Constant { c: f64 },
    /// `c t`
    Linear { c: f64 },
    /// `c sqrt(t + 1)`
    Sqrt { c: f64 },
}

impl Weight {
    pub fn at(&self, t: usize) -> f64 {
        let t = t.max(1) as f64;
        match *self {
            Weight::Constant { c } => c,
            Weight::Linear { c } => c * t,
            Weight::Sqrt { c } => c * (t + 1.0).sqrt(),
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Weight::Constant { c } | Weight::Linear { c } | Weight::Sqrt { c } => {
                require_positive("c", c)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SolverConfig {
    pub kind: SolverKind,
    /// Overrides the default `(theta_t, a_t)` schedule.
    #[serde(default)]
    pub schedule: Option<StepSchedule>,
    /// Strong-convexity modulus; defaults to the oracle's.
    #[serde(default)]
    pub mu: Option<f64>,
    /// Pegasos regularization; defaults to the oracle's modulus.
    #[serde(default)]
    pub lambda: Option<f64>,
    /// Gradient Lipschitz constant for the smooth baseline.
    #[serde(default)]
    pub smoothness: Option<f64>,
    /// Averaging weights `a_t`; defaults depend on the kind.
    #[serde(default)]
    pub weights: Option<Weight>,
    /// Prox weights `gamma_t`; defaults depend on the kind.
    #[serde(default)]
    pub gamma: Option<Weight>,
    /// Label used in outputs; defaults to the kind name.
    #[serde(default)]
    pub label: Option<String>,
}

impl SolverConfig {
    pub fn new(kind: SolverKind) -> Self {
        SolverConfig {
            kind,
            schedule: None,
            mu: None,
            lambda: None,
            smoothness: None,
            weights: None,
            gamma: None,
            label: None,
        }
    }

    pub fn with_schedule(mut self, schedule: StepSchedule) -> Self {
        self.schedule = Some(schedule);
        self
    }

    pub fn with_mu(mut self, mu: f64) -> Self {
        self.mu = Some(mu);
        self
    }

    pub fn with_smoothness(mut self, l: f64) -> Self {
        self.smoothness = Some(l);
        self
    }

    pub fn label(&self) -> String {
        self.label
            .clone()
            .unwrap_or_else(|| self.kind.name().to_string())
    }

    /// Resolves defaults against a problem and checks consistency.
    pub fn resolve(&self, problem: &Composite) -> Result<Resolved> {
        let oracle_mu = problem.oracle.strong_convexity();
        let mu = self.mu.unwrap_or(oracle_mu);
        let kind = self.kind;
        if kind.needs_mu() || kind == SolverKind::PaPsgStrong {
            if kind.needs_mu() {
                require_positive("mu", mu)?;
            } else if !(mu.is_finite() && mu >= 0.0) {
                return Err(Error::positive("mu", mu));
            }
        }
        if !kind.handles_regularizer() && !problem.regularizer.is_zero() {
            return Err(Error::Config(format!(
                "{kind} does not handle the regularizer {}",
                problem.regularizer
            )));
        }
        check_supported(&problem.regularizer, &problem.set)?;
        let schedule = match (self.schedule, kind) {
            (Some(s), _) => s,
            (None, SolverKind::Psg | SolverKind::PsgStochastic | SolverKind::Comid) => {
                StepSchedule::InverseSqrt { c: 1.0 }
            }
            (None, SolverKind::NesterovPsg | SolverKind::Srsg) => StepSchedule::GeneralConvex,
            (None, SolverKind::NesterovPsgStrong | SolverKind::SrsgStrong) => {
                StepSchedule::StronglyConvex { mu }
            }
            (None, SolverKind::Pegasos) => {
                let lambda = self.lambda.unwrap_or(oracle_mu);
                require_positive("lambda", lambda)?;
                StepSchedule::Pegasos { lambda }
            }
            (None, SolverKind::SmoothAccelerated) => {
                let l = self.smoothness.ok_or_else(|| {
                    Error::Config("smooth-accelerated needs a smoothness constant".into())
                })?;
                StepSchedule::Smooth { lipschitz: l }
            }
            (None, _) => StepSchedule::Constant { a: 1.0 },
        };
        schedule.validate()?;
        if kind == SolverKind::SmoothAccelerated {
            let l = self.smoothness.or(match schedule {
                StepSchedule::Smooth { lipschitz } => Some(lipschitz),
                _ => None,
            });
            require_positive("L", l.unwrap_or(0.0))?;
        }
        let strong_pa = kind == SolverKind::PaPsgStrong;
        let weights = self.weights.unwrap_or(if strong_pa {
            Weight::Linear { c: 1.0 }
        } else {
            Weight::Constant { c: 1.0 }
        });
        let gamma = self.gamma.unwrap_or(if strong_pa {
            Weight::Constant { c: 1.0 }
        } else {
            Weight::Sqrt { c: 1.0 }
        });
        weights.validate()?;
        gamma.validate()?;
        Ok(Resolved {
            kind,
            schedule,
            mu,
            smoothness: self.smoothness.unwrap_or(match schedule {
                StepSchedule::Smooth { lipschitz } => lipschitz,
                _ => 0.0,
            }),
            weights,
            gamma,
        })
    }
}

/// A configuration with every default filled in.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Resolved {
    pub kind: SolverKind,
    pub schedule: StepSchedule,
    pub mu: f64,
    pub smoothness: f64,
    pub weights: Weight,
    pub gamma: Weight,
}

/// Evaluation points of a run; `t = 0` and the final `t = budget` are always included.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case")]
pub enum Cadence {
    /// `t = 1, 2, 4, ...` for ratio 2; consecutive points are at least one apart.
    Geometric { ratio: f64 },
    /// Every `every` iterations.
    Linear { every: usize },
}

impl Default for Cadence {
    fn default() -> Self {
        Cadence::Geometric { ratio: 2.0 }
    }
}

impl Cadence {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Cadence::Geometric { ratio } if !(ratio.is_finite() && ratio > 1.0) => {
                Err(Error::InvalidParameter {
                    name: "ratio",
                    value: ratio,
                    reason: "must be > 1",
                })
            }
            Cadence::Linear { every: 0 } => Err(Error::InvalidParameter {
                name: "eval_every",
                value: 0.0,
                reason: "must be >= 1",
            }),
            _ => Ok(()),
        }
    }

    pub fn points(&self, budget: usize) -> Vec<usize> {
        let mut pts = vec![0];
        match *self {
            Cadence::Geometric { ratio } => {
                let mut x = 1.0f64;
                while x.round() as usize <= budget {
                    let t = x.round() as usize;
                    if t > *pts.last().unwrap() {
                        pts.push(t);
                    }
                    x *= ratio;
                }
            }
            Cadence::Linear { every } => pts.extend((every..=budget).step_by(every)),
        }
        if *pts.last().unwrap() != budget {
            pts.push(budget);
        }
        pts
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub budget: usize,
    pub cadence: Cadence,
    pub seed: u64,
    pub sampling: Sampling,
    /// Initial point; the origin when `None`.
    pub w0: Option<Vector>,
    /// Record elapsed time; otherwise `wall_ns` is 0 so outputs are reproducible.
    pub record_wall_time: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            budget: 1000,
            cadence: Cadence::default(),
            seed: 0,
            sampling: Sampling::Stochastic,
            w0: None,
            record_wall_time: false,
        }
    }
}

/// Sees every step of a run.
pub trait Observer {
    fn observe(
        &mut self,
        problem: &Composite,
        before: &SolverState,
        record: &StepRecord,
        after: &SolverState,
    );
}

impl Observer for () {
    fn observe(&mut self, _: &Composite, _: &SolverState, _: &StepRecord, _: &SolverState) {}
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub trace: Trace,
    /// Final iterate.
    pub last: Vector,
    /// Uniform running mean of `w_1..w_T` (`w_0` when no step ran).
    pub average: Vector,
    /// The solver's reported output: `average` for COMID, `last` otherwise.
    pub output: Vector,
}

pub fn run_solver(solver: &SolverConfig, problem: &Composite, run: &RunOptions) -> Result<Trace> {
    Ok(run_solver_observed(solver, problem, run, &mut ())?.trace)
}

/// Runs `run.budget` iterations, recording the objective at the cadence points.
pub fn run_solver_observed(
    solver: &SolverConfig,
    problem: &Composite,
    run: &RunOptions,
    observer: &mut dyn Observer,
) -> Result<RunOutput> {
    let cfg = solver.resolve(problem)?;
    run.cadence.validate()?;
    let n = problem.dim();
    let w0 = run.w0.clone().unwrap_or_else(|| Vector::zeros(n));
    require_dim(n, w0.len())?;
    if problem.set.distance(&w0) > 1e-10 {
        return Err(Error::Config(
            "initial point lies outside the feasible set".into(),
        ));
    }
    let sampling = if cfg.kind.always_deterministic() {
        Sampling::Deterministic
    } else {
        run.sampling
    };

    let mut state = if cfg.kind.uses_averaging() {
        SolverState::with_averaging(w0.clone(), cfg.weights.at(1))
    } else {
        SolverState::new(w0.clone())
    };
    let mut rng = trial_rng(run.seed);
    let mut average = w0.clone();
    let points = run.cadence.points(run.budget);
    let mut next_point = points.iter().copied().peekable();
    let mut trace = Trace::new();
    let start = Instant::now();

    let record = |t: usize, last: &Vector, average: &Vector, trace: &mut Trace| -> Result<()> {
        let averaged = if cfg.kind.uses_averaging() {
            last
        } else {
            average
        };
        let output = if cfg.kind.reports_average() {
            average
        } else {
            last
        };
        trace.push(TraceRow {
            t,
            f_individual: problem.objective(last),
            f_averaged: problem.objective(averaged),
            sparsity_pct: sparsity_pct(output),
            wall_ns: if run.record_wall_time {
                start.elapsed().as_nanos() as u64
            } else {
                0
            },
        })
    };

    if next_point.peek() == Some(&0) {
        next_point.next();
        record(0, &state.w, &average, &mut trace)?;
    }
    for t in 1..=run.budget {
        let before = state.clone();
        let rec = step(&cfg, problem, &mut state, sampling, &mut rng)?;
        let delta = &state.w - &average;
        average.scaled_add(1.0 / t as f64, &delta);
        observer.observe(problem, &before, &rec, &state);
        if next_point.peek() == Some(&t) {
            next_point.next();
            record(t, &state.w, &average, &mut trace)?;
        }
    }
    let output = if cfg.kind.reports_average() {
        average.clone()
    } else {
        state.w.clone()
    };
    Ok(RunOutput {
        trace,
        last: state.w,
        average,
        output,
    })
}

fn step(
    cfg: &Resolved,
    problem: &Composite,
    state: &mut SolverState,
    sampling: Sampling,
    rng: &mut crate::oracle::TrialRng,
) -> Result<StepRecord> {
    let oracle = problem.oracle.as_ref();
    let set = &problem.set;
    let r = &problem.regularizer;
    let t = state.t + 1;
    let mut draw = Draw { sampling, rng };
    match cfg.kind {
        SolverKind::Psg => psg_step(state, oracle, cfg.schedule.step(t), set),
        SolverKind::PsgStochastic | SolverKind::Pegasos => composite_plain_step(
            state,
            oracle,
            &Regularizer::Zero,
            cfg.schedule.step(t),
            set,
            &mut draw,
        ),
        SolverKind::Comid => comid_step(state, oracle, r, cfg.schedule.step(t), set, &mut draw),
        SolverKind::NesterovPsg => nesterov_psg_step(state, oracle, &cfg.schedule, set, &mut draw),
        SolverKind::NesterovPsgStrong => {
            nesterov_psg_strong_step(state, oracle, &cfg.schedule, set, cfg.mu, &mut draw)
        }
        SolverKind::Srsg => srsg_step(state, oracle, r, &cfg.schedule, set, &mut draw),
        SolverKind::SrsgStrong => {
            srsg_strong_step(state, oracle, r, &cfg.schedule, set, cfg.mu, &mut draw)
        }
        SolverKind::QuasiMonotoneDa => quasi_monotone_da_step(
            state,
            oracle,
            cfg.weights.at(t),
            cfg.weights.at(t + 1),
            cfg.gamma.at(t),
            set,
            &mut draw,
        ),
        SolverKind::PaPsg | SolverKind::PaPsgRegularized => pa_psg_step(
            state,
            oracle,
            r,
            cfg.weights.at(t),
            cfg.weights.at(t + 1),
            cfg.gamma.at(t),
            set,
            &mut draw,
        ),
        SolverKind::PaPsgStrong => pa_psg_strong_step(
            state,
            oracle,
            cfg.weights.at(t),
            cfg.weights.at(t + 1),
            cfg.gamma.at(t),
            cfg.mu,
            set,
            &mut draw,
        ),
        SolverKind::SmoothAccelerated => {
            smooth_accelerated_step(state, oracle, cfg.smoothness, &cfg.schedule, set)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::MaxAffineProblem;
    use std::sync::Arc;

    #[test]
    fn kind_names_round_trip() {
        for k in SolverKind::ALL {
            assert_eq!(k.name().parse::<SolverKind>().unwrap(), k);
        }
        assert!("nope".parse::<SolverKind>().is_err());
    }

    #[test]
    fn geometric_points() {
        assert_eq!(Cadence::default().points(10), vec![0, 1, 2, 4, 8, 10]);
        assert_eq!(Cadence::default().points(0), vec![0]);
        assert_eq!(Cadence::Linear { every: 3 }.points(7), vec![0, 3, 6, 7]);
        let fine = Cadence::Geometric {
            ratio: 10f64.powf(0.1),
        }
        .points(100_000);
        assert!(fine.windows(2).all(|w| w[0] < w[1]));
        assert!(
            fine.iter()
                .filter(|&&t| (1000..=100_000).contains(&t))
                .count()
                >= 10
        );
    }

    #[test]
    fn zero_budget_records_start() {
        let c = Composite::unconstrained(Arc::new(MaxAffineProblem::abs_value()));
        let run = RunOptions {
            budget: 0,
            w0: Some(Vector::from_elem(1, 2.0)),
            ..RunOptions::default()
        };
        let tr = run_solver(&SolverConfig::new(SolverKind::NesterovPsg), &c, &run).unwrap();
        assert_eq!(tr.len(), 1);
        assert_eq!(tr.rows()[0].f_individual, 2.0);
    }

    #[test]
    fn strong_solver_without_modulus_fails_early() {
        let c = Composite::unconstrained(Arc::new(MaxAffineProblem::abs_value()));
        let err = run_solver(
            &SolverConfig::new(SolverKind::NesterovPsgStrong),
            &c,
            &RunOptions::default(),
        );
        assert!(err.is_err());
        let smooth = run_solver(
            &SolverConfig::new(SolverKind::SmoothAccelerated),
            &c,
            &RunOptions::default(),
        );
        assert!(smooth.is_err());
    }
}
