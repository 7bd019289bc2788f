//! Projected subgradient methods for nonsmooth convex problems, accelerated
//! with Nesterov's extrapolation.
//!
//! The crate contains the step rules, composite proximal steps, a family of
//! baseline solvers (PSG, dual averaging, primal averaging, COMID, Pegasos,
//! smooth accelerated gradient), concrete hinge-loss and synthetic problems,
//! a LIBSVM reader, run-time inequality monitors and an experiment harness.
//!
//! ```
//! use npsg::prelude::*;
//!
//! let problem = MaxAffineProblem::abs_value();
//! let composite = Composite::unconstrained(std::sync::Arc::new(problem));
//! let solver = SolverConfig::new(SolverKind::NesterovPsg);
//! let run = RunOptions { budget: 200, w0: Some(Vector::from_elem(1, 1.0)), ..RunOptions::default() };
//! let trace = run_solver(&solver, &composite, &run).unwrap();
//! assert!(trace.last().unwrap().f_individual < 0.05);
//! ```

pub mod data;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod linalg;
pub mod oracle;
pub mod problems;
pub mod schedules;
pub mod solvers;
pub mod trace;
pub mod verify;

pub use error::{Error, Result};

pub mod prelude {
    pub use crate::error::{Error, Result};
    pub use crate::geometry::{FeasibleSet, Regularizer};
    pub use crate::linalg::{SparseVector, Vector};
    pub use crate::oracle::{Oracle, Sampling, TrialRng};
    pub use crate::problems::{Composite, HingeMode, HingeProblem, MaxAffineProblem, Quadratic};
    pub use crate::schedules::StepSchedule;
    pub use crate::solvers::{run_solver, RunOptions, SolverConfig, SolverKind};
    pub use crate::trace::{Trace, TraceRow};
}
