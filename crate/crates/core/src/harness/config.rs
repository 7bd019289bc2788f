//! TOML experiment configuration.
//!
//! ```toml
//! trials = 10
//! seed = 0
//! budget = 10000
//! sampling = "stochastic"
//! output = "out/a9a"
//!
//! [eval]
//! rule = "geometric"
//! ratio = 2.0
//!
//! [problem]
//! type = "hinge"
//! path = "data/a9a"
//! lambda = 0.02
//! mode = "l1"
//! subsample = 2000
//!
//! [[solvers]]
//! kind = "srsg"
//! ```

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::data::{a9a_surrogate, load_libsvm, subsample, LabelMap, ParseOptions};
use crate::error::{Error, Result};
use crate::geometry::FeasibleSet;
use crate::linalg::Vector;
use crate::oracle::Sampling;
use crate::problems::{make_max_affine, Composite, HingeMode, HingeProblem, Quadratic};
use crate::solvers::{Cadence, RunOptions, SolverConfig};
use crate::verify::IDENTITY_TOL;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    pub budget: usize,
    #[serde(default)]
    pub eval: Cadence,
    #[serde(default)]
    pub sampling: Sampling,
    /// Constant fill of the initial point; the origin when absent.
    #[serde(default)]
    pub w0_fill: Option<f64>,
    #[serde(default)]
    pub record_wall_time: bool,
    /// Output directory, relative to the config file.
    #[serde(default)]
    pub output: Option<PathBuf>,
    pub problem: ProblemSpec,
    pub solvers: Vec<SolverConfig>,
    #[serde(default)]
    pub tolerances: Tolerances,
    /// Also run the first solver for ten times the budget to estimate `f*`
    /// on problems without a known optimum.
    #[serde(default)]
    pub reference_run: bool,
}

fn default_trials() -> usize {
    10
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default = "default_identity")]
    pub identity: f64,
    #[serde(default = "default_grid")]
    pub grid: f64,
}

fn default_identity() -> f64 {
    IDENTITY_TOL
}

fn default_grid() -> f64 {
    1e-6
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            identity: default_identity(),
            grid: default_grid(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case", deny_unknown_fields)]
pub enum LabelSpec {
    Sign {
        #[serde(default)]
        negative: Option<f64>,
    },
    OneVsRest {
        positive: f64,
    },
}

impl From<LabelSpec> for LabelMap {
    fn from(s: LabelSpec) -> Self {
        match s {
            LabelSpec::Sign { negative } => LabelMap::Sign { negative },
            LabelSpec::OneVsRest { positive } => LabelMap::OneVsRest { positive },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ProblemSpec {
    MaxAffine {
        dimension: usize,
        pieces: usize,
        #[serde(default)]
        mu: f64,
        #[serde(default)]
        seed: u64,
        #[serde(default)]
        noise_std: f64,
        /// Ball constraint around the origin; whole space when absent.
        #[serde(default)]
        radius: Option<f64>,
    },
    Hinge {
        /// LIBSVM file (gzip by `.gz` extension), relative to the config file.
        #[serde(default)]
        path: Option<PathBuf>,
        /// Rows of the synthetic A9A-shaped data, used when `path` is absent.
        #[serde(default)]
        synthetic_rows: Option<usize>,
        #[serde(default)]
        data_seed: u64,
        /// Required in l1 mode; defaults to `1/m` in SVM mode.
        #[serde(default)]
        lambda: Option<f64>,
        mode: HingeMode,
        #[serde(default)]
        subsample: Option<usize>,
        #[serde(default)]
        dimension: Option<usize>,
        #[serde(default)]
        labels: Option<LabelSpec>,
        /// Constrain to `||w|| <= 1/sqrt(lambda)`; defaults to true in SVM mode.
        #[serde(default)]
        pegasos_ball: Option<bool>,
    },
    Quadratic {
        dimension: usize,
        smoothness: f64,
        #[serde(default = "default_condition")]
        condition: f64,
    },
}

fn default_condition() -> f64 {
    1.0
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
        let mut cfg = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.rebase(base);
        Ok(cfg)
    }

    /// Makes relative paths relative to `base`.
    pub fn rebase(&mut self, base: &Path) {
        if let Some(out) = &self.output {
            if out.is_relative() {
                self.output = Some(base.join(out));
            }
        }
        if let ProblemSpec::Hinge { path: Some(p), .. } = &mut self.problem {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be >= 1".into()));
        }
        if self.solvers.is_empty() {
            return Err(Error::Config("no solvers configured".into()));
        }
        self.eval.validate()?;
        if let Cadence::Linear { every } = self.eval {
            if self.budget < every {
                return Err(Error::Config("budget must be >= eval_every".into()));
            }
        }
        let mut labels: Vec<String> = self.solvers.iter().map(|s| s.label()).collect();
        labels.sort();
        labels.dedup();
        if labels.len() != self.solvers.len() {
            return Err(Error::Config("solver labels must be unique".into()));
        }
        Ok(())
    }

    pub fn run_options(&self, dim: usize, trial: usize) -> RunOptions {
        RunOptions {
            budget: self.budget,
            cadence: self.eval,
            seed: self.seed.wrapping_add(trial as u64),
            sampling: self.sampling,
            w0: self.w0_fill.map(|v| Vector::from_elem(dim, v)),
            record_wall_time: self.record_wall_time,
        }
    }
}

impl ProblemSpec {
    pub fn build(&self) -> Result<Composite> {
        match self {
            ProblemSpec::MaxAffine {
                dimension,
                pieces,
                mu,
                seed,
                noise_std,
                radius,
            } => {
                let p = make_max_affine(*dimension, *pieces, *mu, *seed)?.with_noise(*noise_std)?;
                let set = match radius {
                    Some(r) => FeasibleSet::ball(*r)?,
                    None => FeasibleSet::WholeSpace,
                };
                Composite::max_affine(p, set)
            }
            ProblemSpec::Hinge {
                path,
                synthetic_rows,
                data_seed,
                lambda,
                mode,
                subsample: k,
                dimension,
                labels,
                pegasos_ball,
            } => {
                let opts = ParseOptions {
                    labels: labels.map(LabelMap::from).unwrap_or_default(),
                    dimension: *dimension,
                };
                let mut ds = match (path, synthetic_rows) {
                    (Some(p), _) => load_libsvm(p, &opts)?,
                    (None, Some(m)) => a9a_surrogate(*m, *data_seed)?,
                    (None, None) => {
                        return Err(Error::Config(
                            "hinge problem needs a path or synthetic_rows".into(),
                        ))
                    }
                };
                if let Some(k) = k {
                    ds = subsample(&ds, *k, *data_seed)?;
                }
                let lambda = match (lambda, mode) {
                    (Some(l), _) => *l,
                    (None, HingeMode::L2Svm) => 1.0 / ds.len() as f64,
                    (None, HingeMode::L1) => {
                        return Err(Error::Config("l1 hinge needs lambda".into()))
                    }
                };
                let ball = pegasos_ball.unwrap_or(*mode == HingeMode::L2Svm);
                let set = if ball {
                    FeasibleSet::pegasos(lambda)?
                } else {
                    FeasibleSet::WholeSpace
                };
                Composite::hinge(HingeProblem::new(Arc::new(ds), lambda, *mode)?, set)
            }
            ProblemSpec::Quadratic {
                dimension,
                smoothness,
                condition,
            } => Ok(Composite::quadratic(Quadratic::log_spectrum(
                *dimension,
                *smoothness,
                *condition,
            )?)),
        }
    }
}
