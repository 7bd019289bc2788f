//! One-step transitions.
//!
//! Iteration `t >= 1` turns `w_{t-1}` into `w_t`. Extrapolating solvers
//! evaluate at `y = w_{t-1} + theta_t (1/theta_{t-1} - 1)(w_{t-1} - w_{t-2})`
//! and step with `a_t`; `theta_0 = 1` and `w_{-1} = w_0`.

use crate::error::{require_dim, require_positive, Error, Result};
use crate::geometry::{
    composite_step_general, composite_step_strong, project, strong_projection_step, FeasibleSet,
    Regularizer,
};
use crate::linalg::Vector;
use crate::oracle::{Oracle, Sampling, TrialRng};
use crate::schedules::StepSchedule;

/// Dual-averaging or primal-averaging bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct Averaging {
    /// Last auxiliary point `w_t^+` (`w_0` before the first step).
    pub w_plus: Vector,
    /// `s_t = sum a_k g_k`; only used by dual averaging.
    pub grad_sum: Vector,
    /// `A_t = a_1 + ... + a_t` once `t` steps are done (`a_1` at the start).
    pub a_sum: f64,
    pub w0: Vector,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Aux {
    None,
    Averaging(Averaging),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub t: usize,
    /// `w_t`
    pub w: Vector,
    /// `w_{t-1}`
    pub w_prev: Vector,
    /// `theta_t`
    pub theta: f64,
    /// `theta_{t-1}`
    pub theta_prev: f64,
    pub aux: Aux,
}

impl SolverState {
    pub fn new(w0: Vector) -> Self {
        SolverState {
            t: 0,
            w_prev: w0.clone(),
            w: w0,
            theta: 1.0,
            theta_prev: 1.0,
            aux: Aux::None,
        }
    }

    /// State for the averaging methods; `a_1` seeds `A_1`, the weight of `w_0`.
    pub fn with_averaging(w0: Vector, a1: f64) -> Self {
        let n = w0.len();
        let mut s = Self::new(w0.clone());
        s.aux = Aux::Averaging(Averaging {
            w_plus: w0.clone(),
            grad_sum: Vector::zeros(n),
            a_sum: a1,
            w0,
        });
        s
    }

    fn advance(&mut self, w_next: Vector, theta_next: f64) {
        self.w_prev = std::mem::replace(&mut self.w, w_next);
        self.theta_prev = self.theta;
        self.theta = theta_next;
        self.t += 1;
    }

    fn averaging(&mut self) -> Result<&mut Averaging> {
        match &mut self.aux {
            Aux::Averaging(a) => Ok(a),
            Aux::None => Err(Error::Config(
                "averaging step on a state without averaging data".into(),
            )),
        }
    }
}

/// What one step computed, for monitors.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    /// Index of the produced iterate.
    pub t: usize,
    pub a: f64,
    pub theta: f64,
    pub theta_prev: f64,
    /// Point where the (stochastic) subgradient was taken.
    pub point: Vector,
    pub g: Vector,
    /// Auxiliary point and its averaging weight `a_{t+1}` with the new total `A_{t+1}`.
    pub averaging: Option<(Vector, f64, f64)>,
}

/// Source of subgradients for one step.
pub struct Draw<'a> {
    pub sampling: Sampling,
    pub rng: &'a mut TrialRng,
}

impl Draw<'_> {
    fn at(&mut self, oracle: &dyn Oracle, w: &Vector) -> Vector {
        oracle.draw(w, self.sampling, self.rng)
    }
}

/// `w_t + theta_t (1/theta_prev - 1)(w_t - w_prev)`.
pub fn extrapolate(w_t: &Vector, w_prev: &Vector, theta_t: f64, theta_prev: f64) -> Result<Vector> {
    require_positive("theta_prev", theta_prev)?;
    require_positive("theta", theta_t)?;
    require_dim(w_t.len(), w_prev.len())?;
    let coef = theta_t * (1.0 / theta_prev - 1.0);
    let mut y = w_t.clone();
    if coef != 0.0 {
        y.scaled_add(coef, &(w_t - w_prev));
    }
    Ok(y)
}

fn plain_record(t: usize, a: f64, point: Vector, g: Vector) -> StepRecord {
    StepRecord {
        t,
        a,
        theta: 1.0,
        theta_prev: 1.0,
        point,
        g,
        averaging: None,
    }
}

fn finish(state: &mut SolverState, w_next: Vector, theta_next: f64) -> Result<()> {
    if !w_next.iter().all(|x| x.is_finite()) {
        return Err(Error::NonFinite { t: state.t + 1 });
    }
    state.advance(w_next, theta_next);
    Ok(())
}

/// `w_{t+1} = P[w_t - a g(w_t)]` with a full subgradient.
pub fn psg_step(
    state: &mut SolverState,
    oracle: &dyn Oracle,
    a: f64,
    set: &FeasibleSet,
) -> Result<StepRecord> {
    require_positive("a", a)?;
    let g = oracle.subgradient(&state.w);
    let next = composite_step_general(&state.w, &g, a, &Regularizer::Zero, set)?;
    let rec = plain_record(state.t + 1, a, state.w.clone(), g);
    finish(state, next, 1.0)?;
    Ok(rec)
}

/// `w_{t+1} = P[w_t - a g_hat]` with a stochastic estimate.
pub fn stochastic_psg_step(
    state: &mut SolverState,
    oracle: &dyn Oracle,
    a: f64,
    set: &FeasibleSet,
    rng: &mut TrialRng,
) -> Result<StepRecord> {
    composite_plain_step(
        state,
        oracle,
        &Regularizer::Zero,
        a,
        set,
        &mut Draw {
            sampling: Sampling::Stochastic,
            rng,
        },
    )
}

/// Unextrapolated composite step from `w_t`: PSG, Pegasos and COMID.
pub fn composite_plain_step(
    state: &mut SolverState,
    oracle: &dyn Oracle,
    r: &Regularizer,
    a: f64,
    set: &FeasibleSet,
    draw: &mut Draw<'_>,
) -> Result<StepRecord> {
    require_positive("a", a)?;
    let g = draw.at(oracle, &state.w);
    let next = composite_step_general(&state.w, &g, a, r, set)?;
    let rec = plain_record(state.t + 1, a, state.w.clone(), g);
    finish(state, next, 1.0)?;
    Ok(rec)
}

/// COMID: `argmin a<g_hat, w> + a r(w) + 1/2||w - w_t||^2`.
pub fn comid_step(
    state: &mut SolverState,
    oracle: &dyn Oracle,
    r: &Regularizer,
    a: f64,
    set: &FeasibleSet,
    draw: &mut Draw<'_>,
) -> Result<StepRecord> {
    composite_plain_step(state, oracle, r, a, set, draw)
}

fn extrapolated_point(
    state: &SolverState,
    schedule: &StepSchedule,
) -> Result<(usize, f64, f64, Vector)> {
    let t = state.t + 1;
    let theta = schedule.next_theta(t, state.theta);
    let y = extrapolate(&state.w, &state.w_prev, theta, state.theta)?;
    Ok((t, theta, schedule.step(t), y))
}

/// Nesterov-extrapolated PSG: `w_{t+1} = P[y_t - a_t g(y_t)]`.
pub fn nesterov_psg_step(
    state: &mut SolverState,
    oracle: &dyn Oracle,
    schedule: &StepSchedule,
    set: &FeasibleSet,
    draw: &mut Draw<'_>,
) -> Result<StepRecord> {
    srsg_step(state, oracle, &Regularizer::Zero, schedule, set, draw)
}

/// Strongly convex variant: projected convex combination of `y_t` and `w_t`.
pub fn nesterov_psg_strong_step(
    state: &mut SolverState,
    oracle: &dyn Oracle,
    schedule: &StepSchedule,
    set: &FeasibleSet,
    mu: f64,
    draw: &mut Draw<'_>,
) -> Result<StepRecord> {
    require_positive("mu", mu)?;
    let (t, theta, a, y) = extrapolated_point(state, schedule)?;
    let g = draw.at(oracle, &y);
    let next = strong_projection_step(&y, &state.w, &g, a, theta, mu, set)?;
    let rec = StepRecord {
        t,
        a,
        theta,
        theta_prev: state.theta,
        point: y,
        g,
        averaging: None,
    };
    finish(state, next, theta)?;
    Ok(rec)
}

/// Regularized extrapolated step; `r` enters through its exact prox.
pub fn srsg_step(
    state: &mut SolverState,
    oracle: &dyn Oracle,
    r: &Regularizer,
    schedule: &StepSchedule,
    set: &FeasibleSet,
    draw: &mut Draw<'_>,
) -> Result<StepRecord> {
    let (t, theta, a, y) = extrapolated_point(state, schedule)?;
    let g = draw.at(oracle, &y);
    let next = composite_step_general(&y, &g, a, r, set)?;
    let rec = StepRecord {
        t,
        a,
        theta,
        theta_prev: state.theta,
        point: y,
        g,
        averaging: None,
    };
    finish(state, next, theta)?;
    Ok(rec)
}

/// Regularized strongly convex step with the extra `(a mu / 2 theta)||w - w_t||^2` term.
#[allow(clippy::too_many_arguments)]
pub fn srsg_strong_step(
    state: &mut SolverState,
    oracle: &dyn Oracle,
    r: &Regularizer,
    schedule: &StepSchedule,
    set: &FeasibleSet,
    mu: f64,
    draw: &mut Draw<'_>,
) -> Result<StepRecord> {
    require_positive("mu", mu)?;
    let (t, theta, a, y) = extrapolated_point(state, schedule)?;
    let g = draw.at(oracle, &y);
    let next = composite_step_strong(&y, &state.w, &g, a, theta, mu, r, set)?;
    let rec = StepRecord {
        t,
        a,
        theta,
        theta_prev: state.theta,
        point: y,
        g,
        averaging: None,
    };
    finish(state, next, theta)?;
    Ok(rec)
}

/// Accelerated gradient step `P[y_t - grad f(y_t)/L]` for smooth `f`.
pub fn smooth_accelerated_step(
    state: &mut SolverState,
    oracle: &dyn Oracle,
    lipschitz: f64,
    theta_rule: &StepSchedule,
    set: &FeasibleSet,
) -> Result<StepRecord> {
    require_positive("L", lipschitz)?;
    let t = state.t + 1;
    let theta = theta_rule.next_theta(t, state.theta);
    let y = extrapolate(&state.w, &state.w_prev, theta, state.theta)?;
    let g = oracle.subgradient(&y);
    let a = 1.0 / lipschitz;
    let next = composite_step_general(&y, &g, a, &Regularizer::Zero, set)?;
    let rec = StepRecord {
        t,
        a,
        theta,
        theta_prev: state.theta,
        point: y,
        g,
        averaging: None,
    };
    finish(state, next, theta)?;
    Ok(rec)
}

fn average_in(
    state: &mut SolverState,
    w_plus: Vector,
    a_next: f64,
) -> Result<(Vector, Vector, f64, f64)> {
    require_positive("a_next", a_next)?;
    let w = state.w.clone();
    let avg = state.averaging()?;
    let a_now = avg.a_sum;
    let a_new = a_now + a_next;
    let mut next = &w * (a_now / a_new);
    next.scaled_add(a_next / a_new, &w_plus);
    avg.a_sum = a_new;
    avg.w_plus = w_plus.clone();
    Ok((next, w_plus, a_next, a_new))
}

fn averaging_record(
    t: usize,
    a: f64,
    point: Vector,
    g: Vector,
    avg: (Vector, f64, f64),
) -> StepRecord {
    StepRecord {
        t,
        a,
        theta: 1.0,
        theta_prev: 1.0,
        point,
        g,
        averaging: Some(avg),
    }
}

/// Quasi-monotone dual averaging with `d(w) = 1/2||w - w_0||^2`:
/// `w^+ = P[w_0 - s_t/gamma_t]`, then `w_{t+1} = (A_t w_t + a_{t+1} w^+)/A_{t+1}`.
pub fn quasi_monotone_da_step(
    state: &mut SolverState,
    oracle: &dyn Oracle,
    a: f64,
    a_next: f64,
    gamma: f64,
    set: &FeasibleSet,
    draw: &mut Draw<'_>,
) -> Result<StepRecord> {
    require_positive("a", a)?;
    require_positive("gamma", gamma)?;
    let g = draw.at(oracle, &state.w);
    let avg = state.averaging()?;
    avg.grad_sum.scaled_add(a, &g);
    let mut target = avg.w0.clone();
    target.scaled_add(-1.0 / gamma, &avg.grad_sum);
    let w_plus = project(set, &target)?;
    let point = state.w.clone();
    let (next, w_plus, a_next, a_new) = average_in(state, w_plus, a_next)?;
    let rec = averaging_record(state.t + 1, a, point, g, (w_plus, a_next, a_new));
    finish(state, next, 1.0)?;
    Ok(rec)
}

/// Primal averaging, general and regularized forms:
/// `w^+ = argmin a<g_hat, w> + gamma/2 ||w - w^+_{prev}||^2 + a r(w)`.
#[allow(clippy::too_many_arguments)]
pub fn pa_psg_step(
    state: &mut SolverState,
    oracle: &dyn Oracle,
    r: &Regularizer,
    a: f64,
    a_next: f64,
    gamma: f64,
    set: &FeasibleSet,
    draw: &mut Draw<'_>,
) -> Result<StepRecord> {
    require_positive("a", a)?;
    require_positive("gamma", gamma)?;
    let g = draw.at(oracle, &state.w);
    let prev_plus = state.averaging()?.w_plus.clone();
    let w_plus = composite_step_general(&prev_plus, &g, a / gamma, r, set)?;
    let point = state.w.clone();
    let (next, w_plus, a_next, a_new) = average_in(state, w_plus, a_next)?;
    let rec = averaging_record(state.t + 1, a, point, g, (w_plus, a_next, a_new));
    finish(state, next, 1.0)?;
    Ok(rec)
}

/// Strongly convex primal averaging:
/// `w^+ = P[(gamma w^+_{prev} - a (g_hat - mu w_t))/(gamma + a mu)]`.
#[allow(clippy::too_many_arguments)]
pub fn pa_psg_strong_step(
    state: &mut SolverState,
    oracle: &dyn Oracle,
    a: f64,
    a_next: f64,
    gamma: f64,
    mu: f64,
    set: &FeasibleSet,
    draw: &mut Draw<'_>,
) -> Result<StepRecord> {
    require_positive("a", a)?;
    require_positive("gamma", gamma)?;
    if !(mu.is_finite() && mu >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "mu",
            value: mu,
            reason: "must be >= 0",
        });
    }
    let g = draw.at(oracle, &state.w);
    let denom = gamma + a * mu;
    let mut target = state.averaging()?.w_plus.clone() * (gamma / denom);
    target.scaled_add(-a / denom, &g);
    target.scaled_add(a * mu / denom, &state.w);
    let w_plus = project(set, &target)?;
    let point = state.w.clone();
    let (next, w_plus, a_next, a_new) = average_in(state, w_plus, a_next)?;
    let rec = averaging_record(state.t + 1, a, point, g, (w_plus, a_next, a_new));
    finish(state, next, 1.0)?;
    Ok(rec)
}
