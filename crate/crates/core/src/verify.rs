//! Brute-force oracles and run-time inequality monitors.
//!
//! Monitors observe a deterministic run step by step and keep the most
//! negative slack of the inequality they check; a check passes when that
//! slack is at least `-tol`.

use serde::Serialize;

use crate::error::{require_positive, Error, Result};
use crate::linalg::{dist_sq, norm, Vector};
use crate::oracle::Sampling;
use crate::problems::Composite;
use crate::solvers::{
    run_solver_observed, Observer, RunOptions, SolverConfig, SolverState, StepRecord,
};

/// Default absolute tolerance for identity checks.
pub const IDENTITY_TOL: f64 = 1e-9;

/// Argmin of `f` over the grid `lo, lo + step, ..., hi`.
///
/// Fails with `BracketTooSmall` when the minimum sits on either end.
pub fn grid_prox_oracle<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, step: f64) -> Result<f64> {
    require_positive("step", step)?;
    if !(lo.is_finite() && hi.is_finite() && hi > lo) {
        return Err(Error::Config(format!("invalid grid bracket [{lo}, {hi}]")));
    }
    let n = ((hi - lo) / step).floor() as usize;
    let mut best = (0, f64::INFINITY);
    for k in 0..=n {
        let v = f(lo + k as f64 * step);
        if v < best.1 {
            best = (k, v);
        }
    }
    let at = lo + best.0 as f64 * step;
    if best.0 == 0 || best.0 == n {
        return Err(Error::BracketTooSmall { at });
    }
    Ok(at)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonitorReport {
    pub name: String,
    pub checks: usize,
    /// Most negative slack seen (0 when nothing was checked).
    pub worst_slack: f64,
    /// Iterations with slack below `-tol`.
    pub violations: usize,
    pub first_violation: Option<usize>,
    pub tol: f64,
    pub passed: bool,
}

#[derive(Debug, Clone)]
struct SlackTracker {
    name: String,
    tol: f64,
    checks: usize,
    worst: f64,
    violations: usize,
    first: Option<usize>,
}

impl SlackTracker {
    fn new(name: impl Into<String>, tol: f64) -> Self {
        SlackTracker {
            name: name.into(),
            tol,
            checks: 0,
            worst: f64::INFINITY,
            violations: 0,
            first: None,
        }
    }

    fn add(&mut self, t: usize, slack: f64) {
        self.checks += 1;
        // NaN counts as a violation
        if slack.is_nan() || slack < self.worst {
            self.worst = slack;
        }
        if slack.is_nan() || slack < -self.tol {
            self.violations += 1;
            self.first.get_or_insert(t);
        }
    }

    fn report(&self) -> MonitorReport {
        let worst = if self.checks == 0 { 0.0 } else { self.worst };
        MonitorReport {
            name: self.name.clone(),
            checks: self.checks,
            worst_slack: worst,
            violations: self.violations,
            first_violation: self.first,
            tol: self.tol,
            passed: self.violations == 0,
        }
    }
}

pub trait Monitor: Observer {
    fn report(&self) -> MonitorReport;
}

impl Observer for Vec<Box<dyn Monitor>> {
    fn observe(
        &mut self,
        p: &Composite,
        before: &SolverState,
        rec: &StepRecord,
        after: &SolverState,
    ) {
        for m in self.iter_mut() {
            m.observe(p, before, rec, after);
        }
    }
}

/// `a_t [F(w_{t+1}) - F(w*)] <= 1/2||w* - y_t||^2 - 1/2||w* - w_{t+1}||^2 + 1/2 a_t^2 M^2`.
#[derive(Debug, Clone)]
pub struct Lemma2Monitor {
    wstar: Vector,
    fstar: f64,
    m: f64,
    slack: SlackTracker,
}

impl Lemma2Monitor {
    pub fn new(wstar: Vector, fstar: f64, m: f64, tol: f64) -> Self {
        Lemma2Monitor {
            wstar,
            fstar,
            m,
            slack: SlackTracker::new(format!("lemma2(M={m})"), tol),
        }
    }
}

impl Observer for Lemma2Monitor {
    fn observe(&mut self, p: &Composite, _: &SolverState, rec: &StepRecord, after: &SolverState) {
        let a = rec.a;
        let lhs = a * (p.objective(&after.w) - self.fstar);
        let rhs = 0.5 * dist_sq(&self.wstar, &rec.point) - 0.5 * dist_sq(&self.wstar, &after.w)
            + 0.5 * a * a * self.m * self.m;
        self.slack.add(rec.t, rhs - lhs);
    }
}

impl Monitor for Lemma2Monitor {
    fn report(&self) -> MonitorReport {
        self.slack.report()
    }
}

/// Averaged PSG bound
/// `(1/A_t) sum a_k f(x_k) - f* <= (1/A_t)[1/2||x_1 - w*||^2 + sum a_k^2/2 ||g_k||^2]`,
/// where `x_k` is the point the `k`-th subgradient was taken at.
#[derive(Debug, Clone)]
pub struct Eq7Monitor {
    wstar: Vector,
    fstar: f64,
    start: Option<f64>,
    sum_af: f64,
    sum_a: f64,
    sum_g: f64,
    slack: SlackTracker,
}

impl Eq7Monitor {
    pub fn new(wstar: Vector, fstar: f64, tol: f64) -> Self {
        Eq7Monitor {
            wstar,
            fstar,
            start: None,
            sum_af: 0.0,
            sum_a: 0.0,
            sum_g: 0.0,
            slack: SlackTracker::new("averaged-psg-bound", tol),
        }
    }
}

impl Observer for Eq7Monitor {
    fn observe(&mut self, p: &Composite, _: &SolverState, rec: &StepRecord, _: &SolverState) {
        let d0 = *self
            .start
            .get_or_insert_with(|| 0.5 * dist_sq(&rec.point, &self.wstar));
        let a = rec.a;
        self.sum_a += a;
        self.sum_af += a * (p.objective(&rec.point) - self.fstar);
        self.sum_g += 0.5 * a * a * rec.g.dot(&rec.g);
        self.slack
            .add(rec.t, (d0 + self.sum_g - self.sum_af) / self.sum_a);
    }
}

impl Monitor for Eq7Monitor {
    fn report(&self) -> MonitorReport {
        self.slack.report()
    }
}

/// Smooth accelerated bound `f(w_t) - f* <= (theta_t^2 L/2)||w_0 - w*||^2`.
#[derive(Debug, Clone)]
pub struct SmoothBoundMonitor {
    wstar: Vector,
    fstar: f64,
    l: f64,
    start: Option<f64>,
    slack: SlackTracker,
}

impl SmoothBoundMonitor {
    pub fn new(wstar: Vector, fstar: f64, l: f64, tol: f64) -> Self {
        SmoothBoundMonitor {
            wstar,
            fstar,
            l,
            start: None,
            slack: SlackTracker::new(format!("smooth-bound(L={l})"), tol),
        }
    }
}

impl Observer for SmoothBoundMonitor {
    fn observe(
        &mut self,
        p: &Composite,
        before: &SolverState,
        rec: &StepRecord,
        after: &SolverState,
    ) {
        let d0 = *self
            .start
            .get_or_insert_with(|| dist_sq(&before.w, &self.wstar));
        let bound = 0.5 * rec.theta * rec.theta * self.l * d0;
        self.slack
            .add(rec.t, bound - (p.objective(&after.w) - self.fstar));
    }
}

impl Monitor for SmoothBoundMonitor {
    fn report(&self) -> MonitorReport {
        self.slack.report()
    }
}

/// `z` computed from its definition at the new extrapolated point against the
/// recursion `z = -(1/theta_prev - 1) w_{t-2} + (1/theta_prev) w_{t-1}`;
/// slack is `-(relative difference)`.
#[derive(Debug, Clone)]
pub struct ZIdentityMonitor {
    slack: SlackTracker,
}

impl ZIdentityMonitor {
    pub fn new(tol: f64) -> Self {
        ZIdentityMonitor {
            slack: SlackTracker::new("z-identity", tol),
        }
    }
}

/// `-(1/theta - 1) w + (1/theta) v`
fn z_combo(theta: f64, w: &Vector, v: &Vector) -> Vector {
    let mut z = v / theta;
    z.scaled_add(-(1.0 / theta - 1.0), w);
    z
}

impl Observer for ZIdentityMonitor {
    fn observe(&mut self, _: &Composite, before: &SolverState, rec: &StepRecord, _: &SolverState) {
        let from_def = z_combo(rec.theta, &before.w, &rec.point);
        let from_rec = z_combo(rec.theta_prev, &before.w_prev, &before.w);
        let rel = norm(&(&from_def - &from_rec)) / norm(&from_rec).max(1.0);
        self.slack.add(rec.t, -rel);
    }
}

impl Monitor for ZIdentityMonitor {
    fn report(&self) -> MonitorReport {
        self.slack.report()
    }
}

/// Primal-averaging identity `w_t = (A_1 w_0 + sum_k a_{k+1} w_k^+)/A_{t+1}`.
#[derive(Debug, Clone)]
pub struct AverageIdentityMonitor {
    sum: Option<Vector>,
    slack: SlackTracker,
}

impl AverageIdentityMonitor {
    pub fn new(tol: f64) -> Self {
        AverageIdentityMonitor {
            sum: None,
            slack: SlackTracker::new("average-identity", tol),
        }
    }
}

impl Observer for AverageIdentityMonitor {
    fn observe(
        &mut self,
        _: &Composite,
        before: &SolverState,
        rec: &StepRecord,
        after: &SolverState,
    ) {
        let Some((w_plus, weight, total)) = &rec.averaging else {
            return;
        };
        let sum = self.sum.get_or_insert_with(|| &before.w * (total - weight));
        sum.scaled_add(*weight, w_plus);
        let avg = &*sum / *total;
        let rel = norm(&(&avg - &after.w)) / norm(&after.w).max(1.0);
        self.slack.add(rec.t, -rel);
    }
}

impl Monitor for AverageIdentityMonitor {
    fn report(&self) -> MonitorReport {
        self.slack.report()
    }
}

/// Distance of every iterate (and auxiliary point) to the feasible set.
#[derive(Debug, Clone)]
pub struct FeasibilityMonitor {
    slack: SlackTracker,
}

impl FeasibilityMonitor {
    pub fn new(tol: f64) -> Self {
        FeasibilityMonitor {
            slack: SlackTracker::new("feasibility", tol),
        }
    }
}

impl Observer for FeasibilityMonitor {
    fn observe(&mut self, p: &Composite, _: &SolverState, rec: &StepRecord, after: &SolverState) {
        let mut d = p.set.distance(&after.w);
        if let Some((w_plus, _, _)) = &rec.averaging {
            d = d.max(p.set.distance(w_plus));
        }
        self.slack.add(rec.t, -d);
    }
}

impl Monitor for FeasibilityMonitor {
    fn report(&self) -> MonitorReport {
        self.slack.report()
    }
}

/// Runs `solver` deterministically under the given monitors and returns their reports.
pub fn run_monitored(
    solver: &SolverConfig,
    problem: &Composite,
    run: &RunOptions,
    monitors: Vec<Box<dyn Monitor>>,
) -> Result<Vec<MonitorReport>> {
    let mut monitors = monitors;
    let run = RunOptions {
        sampling: Sampling::Deterministic,
        ..run.clone()
    };
    run_solver_observed(solver, problem, &run, &mut monitors)?;
    Ok(monitors.iter().map(|m| m.report()).collect())
}

/// Sum over a run of `a_t <grad f(y_t) - g_hat_t, y_t - w*>`, which has zero mean.
#[derive(Debug, Clone)]
struct CrossTerm {
    wstar: Vector,
    total: f64,
}

impl Observer for CrossTerm {
    fn observe(&mut self, p: &Composite, _: &SolverState, rec: &StepRecord, _: &SolverState) {
        let full = p.oracle.subgradient(&rec.point);
        self.total += rec.a * (&full - &rec.g).dot(&(&rec.point - &self.wstar));
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatisticalReport {
    pub trials: usize,
    pub mean: f64,
    pub std_error: f64,
    /// `mean >= -3 std_error`
    pub passed: bool,
}

/// Statistical form of the stochastic noise term in the per-step inequality:
/// the per-trial sum of `a_t <grad f(y_t) - g_hat_t, y_t - w*>` must have a
/// mean no lower than three standard errors below zero.
pub fn stochastic_cross_term_check(
    solver: &SolverConfig,
    problem: &Composite,
    run: &RunOptions,
    wstar: &Vector,
    trials: usize,
) -> Result<StatisticalReport> {
    if trials < 2 {
        return Err(Error::InvalidParameter {
            name: "trials",
            value: trials as f64,
            reason: "need at least 2",
        });
    }
    let mut sums = Vec::with_capacity(trials);
    for i in 0..trials {
        let mut obs = CrossTerm {
            wstar: wstar.clone(),
            total: 0.0,
        };
        let opts = RunOptions {
            seed: run.seed + i as u64,
            sampling: Sampling::Stochastic,
            ..run.clone()
        };
        run_solver_observed(solver, problem, &opts, &mut obs)?;
        sums.push(obs.total);
    }
    let n = trials as f64;
    let mean = sums.iter().sum::<f64>() / n;
    let var = sums.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let std_error = (var / n).sqrt();
    Ok(StatisticalReport {
        trials,
        mean,
        std_error,
        passed: mean >= -3.0 * std_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn grid_soft_threshold() {
        let x = grid_prox_oracle(|x| x.abs() + 0.5 * (x - 3.0).powi(2), -5.0, 5.0, 1e-4).unwrap();
        assert_abs_diff_eq!(x, 2.0, epsilon = 1e-4);
        let v = 0.37;
        let x = grid_prox_oracle(|x| 0.5 * (x - v).powi(2), -1.0, 1.0, 1e-4).unwrap();
        assert_abs_diff_eq!(x, v, epsilon = 1e-4);
    }

    #[test]
    fn boundary_minimum_is_rejected() {
        let err = grid_prox_oracle(|x| (x - 3.0).powi(2), -1.0, 1.0, 1e-3);
        assert!(matches!(err, Err(Error::BracketTooSmall { .. })));
        assert!(grid_prox_oracle(|x| x, 0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn tracker_counts_nan_as_violation() {
        let mut s = SlackTracker::new("x", 1e-9);
        s.add(1, 0.5);
        s.add(2, f64::NAN);
        let r = s.report();
        assert_eq!(r.violations, 1);
        assert_eq!(r.first_violation, Some(2));
        assert!(!r.passed);
    }
}
