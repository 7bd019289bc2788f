//! Extrapolation weights `theta_t` and step sizes `a_t`.
//!
//! Iteration `t` (1-based) of an extrapolating solver uses `theta_t`,
//! `theta_{t-1}` and `a_t`, with `theta_0 = 1`. All schedules are pure
//! functions of `t` except the FISTA rule, which is a recursion on the
//! previous weight.

use std::fmt;

use crate::error::{require_positive, Error, Result};

/// `2/(t+1)`, with `theta_0 = 1`.
pub fn theta_general(t: usize) -> f64 {
    if t == 0 {
        1.0
    } else {
        2.0 / (t as f64 + 1.0)
    }
}

/// `(t+1)^(-3/2)`.
pub fn step_general(t: usize) -> f64 {
    let s = t as f64 + 1.0;
    1.0 / (s * s.sqrt())
}

/// `1` for `t <= 7`, `3/(t+1)` afterwards.
pub fn theta_strong(t: usize) -> f64 {
    if t <= 7 {
        1.0
    } else {
        3.0 / (t as f64 + 1.0)
    }
}

/// `3/(mu t^2)` for `t >= 1`.
pub fn step_strong(t: usize, mu: f64) -> Result<f64> {
    require_positive("mu", mu)?;
    if t == 0 {
        return Err(Error::InvalidParameter {
            name: "t",
            value: 0.0,
            reason: "strongly convex step is defined for t >= 1",
        });
    }
    let t = t as f64;
    Ok(3.0 / (mu * t * t))
}

/// Positive root of `(1 - x)/x^2 = 1/theta^2`.
pub fn theta_fista_next(theta: f64) -> f64 {
    let t2 = theta * theta;
    // (sqrt(t^4 + 4t^2) - t^2)/2 rewritten to avoid cancellation for small theta.
    2.0 * t2 / ((t2 * t2 + 4.0 * t2).sqrt() + t2)
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum StepSchedule {
    /// `theta_t = 2/(t+1)`, `a_t = (t+1)^(-3/2)`.
    GeneralConvex,
    /// Piecewise `theta_t`, `a_t = 3/(mu t^2)`.
    StronglyConvex { mu: f64 },
    /// FISTA weight recursion with a unit step; the smooth solver scales by `1/L`.
    FistaTheta,
    /// No extrapolation, `a_t = 1/(lambda t)`.
    Pegasos { lambda: f64 },
    /// No extrapolation, `a_t = a`.
    Constant { a: f64 },
    /// No extrapolation, `a_t = c/sqrt(t+1)`.
    InverseSqrt { c: f64 },
    /// `theta_t = 2/(t+1)`, `a_t = 1/L`.
    Smooth { lipschitz: f64 },
}

impl StepSchedule {
    pub fn validate(&self) -> Result<()> {
        match *self {
            StepSchedule::GeneralConvex | StepSchedule::FistaTheta => Ok(()),
            StepSchedule::StronglyConvex { mu } => require_positive("mu", mu),
            StepSchedule::Pegasos { lambda } => require_positive("lambda", lambda),
            StepSchedule::Constant { a } => require_positive("a", a),
            StepSchedule::InverseSqrt { c } => require_positive("c", c),
            StepSchedule::Smooth { lipschitz } => require_positive("L", lipschitz),
        }
    }

    /// `theta_t`. The FISTA rule is unrolled from `theta_0 = 1`.
    pub fn theta(&self, t: usize) -> f64 {
        match self {
            StepSchedule::GeneralConvex | StepSchedule::Smooth { .. } => theta_general(t),
            StepSchedule::StronglyConvex { .. } => theta_strong(t),
            StepSchedule::FistaTheta => (0..t).fold(1.0, |th, _| theta_fista_next(th)),
            StepSchedule::Pegasos { .. }
            | StepSchedule::Constant { .. }
            | StepSchedule::InverseSqrt { .. } => 1.0,
        }
    }

    /// `theta_t` given `theta_{t-1}`; O(1) for every variant.
    pub fn next_theta(&self, t: usize, theta_prev: f64) -> f64 {
        match self {
            StepSchedule::FistaTheta if t > 0 => theta_fista_next(theta_prev),
            _ => self.theta(t),
        }
    }

    /// `a_t` for `t >= 1`.
    pub fn step(&self, t: usize) -> f64 {
        let t = t.max(1);
        match *self {
            StepSchedule::GeneralConvex => step_general(t),
            StepSchedule::StronglyConvex { mu } => 3.0 / (mu * (t * t) as f64),
            StepSchedule::FistaTheta => 1.0,
            StepSchedule::Pegasos { lambda } => 1.0 / (lambda * t as f64),
            StepSchedule::Constant { a } => a,
            StepSchedule::InverseSqrt { c } => c / (t as f64 + 1.0).sqrt(),
            StepSchedule::Smooth { lipschitz } => 1.0 / lipschitz,
        }
    }

    pub fn extrapolates(&self) -> bool {
        matches!(
            self,
            StepSchedule::GeneralConvex
                | StepSchedule::StronglyConvex { .. }
                | StepSchedule::FistaTheta
                | StepSchedule::Smooth { .. }
        )
    }
}

impl fmt::Display for StepSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StepSchedule::GeneralConvex => write!(f, "general-convex"),
            StepSchedule::StronglyConvex { mu } => write!(f, "strongly-convex(mu={mu})"),
            StepSchedule::FistaTheta => write!(f, "fista-theta"),
            StepSchedule::Pegasos { lambda } => write!(f, "pegasos(lambda={lambda})"),
            StepSchedule::Constant { a } => write!(f, "constant(a={a})"),
            StepSchedule::InverseSqrt { c } => write!(f, "inverse-sqrt(c={c})"),
            StepSchedule::Smooth { lipschitz } => write!(f, "smooth(L={lipschitz})"),
        }
    }
}

/// Which side condition a weight sequence must satisfy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Recursion {
    /// `(1 - theta_{t+1})/theta_{t+1}^2 <= 1/theta_t^2`
    General,
    /// `(1 - theta_{t+1} + theta_{t+1}^2)/theta_{t+1}^2 <= 1/theta_t^2`
    Strong,
}

impl Recursion {
    pub fn lhs(&self, next: f64) -> f64 {
        match self {
            Recursion::General => (1.0 - next) / (next * next),
            Recursion::Strong => (1.0 - next + next * next) / (next * next),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecursionViolation {
    /// Index of `theta_{t+1}`; the failing transition is `t -> t+1`.
    pub index: usize,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RecursionReport {
    pub transitions: usize,
    pub violations: Vec<RecursionViolation>,
    /// Largest `|lhs - rhs| / rhs` over all transitions; 0 means equality throughout.
    pub max_rel_gap: f64,
}

impl RecursionReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Slack allowed before a transition is reported.
pub const RECURSION_SLACK: f64 = 1e-12;

/// Checks every consecutive pair of `thetas` against the chosen recursion.
///
/// A transition fails when `lhs > rhs` by more than `RECURSION_SLACK`
/// relative to `rhs`. Values outside `(0, 1]` are reported as failures too.
pub fn validate_recursion<I>(thetas: I, variant: Recursion) -> RecursionReport
where
    I: IntoIterator<Item = f64>,
{
    let mut report = RecursionReport::default();
    let mut iter = thetas.into_iter().enumerate();
    let Some((_, mut prev)) = iter.next() else {
        return report;
    };
    for (index, next) in iter {
        report.transitions += 1;
        let rhs = 1.0 / (prev * prev);
        let lhs = variant.lhs(next);
        let in_range = next > 0.0 && next <= 1.0 && prev > 0.0 && prev <= 1.0;
        let rel = (lhs - rhs) / rhs;
        report.max_rel_gap = report.max_rel_gap.max(rel.abs());
        if !in_range || rel > RECURSION_SLACK {
            report
                .violations
                .push(RecursionViolation { index, lhs, rhs });
        }
        prev = next;
    }
    report
}

/// Runs `validate_recursion` over `theta_0..=theta_{t_max}` of a schedule.
pub fn validate_schedule(
    schedule: &StepSchedule,
    t_max: usize,
    variant: Recursion,
) -> RecursionReport {
    let mut theta = 1.0;
    let seq = (0..=t_max).map(move |t| {
        theta = schedule.next_theta(t, theta);
        theta
    });
    validate_recursion(seq, variant)
}
