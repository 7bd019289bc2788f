//! First-order oracle contract.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::linalg::{dist_sq, Vector};

/// Per-trial random stream. Trials derive it from `base_seed + trial_index`.
pub type TrialRng = ChaCha8Rng;

pub fn trial_rng(seed: u64) -> TrialRng {
    TrialRng::seed_from_u64(seed)
}

/// Whether a solver queries full subgradients or unbiased stochastic estimates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sampling {
    Deterministic,
    #[default]
    Stochastic,
}

/// Objective `f` with a subgradient map and an unbiased stochastic estimate.
pub trait Oracle: Send + Sync {
    fn dim(&self) -> usize;

    fn value(&self, w: &Vector) -> f64;

    /// Some element of the subdifferential at `w`.
    fn subgradient(&self, w: &Vector) -> Vector;

    /// Unbiased estimate of a subgradient at `w`. Deterministic oracles return
    /// the full subgradient.
    fn stochastic_subgradient(&self, w: &Vector, _rng: &mut TrialRng) -> Vector {
        self.subgradient(w)
    }

    /// Strong-convexity modulus; 0 for merely convex objectives.
    fn strong_convexity(&self) -> f64 {
        0.0
    }

    /// Bound on subgradient norms over the feasible set, if known.
    fn lipschitz_bound(&self) -> Option<f64> {
        None
    }

    /// Bound on `E||g_hat - g||^2`, if known.
    fn variance_bound(&self) -> Option<f64> {
        None
    }

    fn draw(&self, w: &Vector, sampling: Sampling, rng: &mut TrialRng) -> Vector {
        match sampling {
            Sampling::Deterministic => self.subgradient(w),
            Sampling::Stochastic => self.stochastic_subgradient(w, rng),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidityReport {
    /// Most negative `f(u) - f(w) - <g(w), u - w> - (mu/2)||u - w||^2`.
    pub max_violation: f64,
    pub pairs: usize,
    pub passed: bool,
}

/// Checks the (strong) subgradient inequality on every `(u, w)` pair.
///
/// The reported value is the minimum slack; the check passes iff it is at
/// least `-tol`.
pub fn check_subgradient_validity<O: Oracle + ?Sized>(
    oracle: &O,
    pairs: &[(Vector, Vector)],
    tol: f64,
) -> ValidityReport {
    let mu = oracle.strong_convexity();
    let worst = pairs
        .iter()
        .map(|(u, w)| {
            let g = oracle.subgradient(w);
            let lin = g.dot(&(u - w));
            oracle.value(u) - oracle.value(w) - lin - 0.5 * mu * dist_sq(u, w)
        })
        .fold(f64::INFINITY, f64::min);
    let max_violation = if pairs.is_empty() { 0.0 } else { worst };
    ValidityReport {
        max_violation,
        pairs: pairs.len(),
        passed: max_violation >= -tol,
    }
}

/// Componentwise mean and standard deviation of `draws` stochastic estimates at `w`.
pub fn stochastic_moments<O: Oracle + ?Sized>(
    oracle: &O,
    w: &Vector,
    draws: usize,
    rng: &mut TrialRng,
) -> (Vector, Vector) {
    let n = oracle.dim();
    let mut mean = Vector::zeros(n);
    let mut m2 = Vector::zeros(n);
    for k in 1..=draws {
        let g = oracle.stochastic_subgradient(w, rng);
        let delta = &g - &mean;
        mean.scaled_add(1.0 / k as f64, &delta);
        let delta2 = &g - &mean;
        m2 += &(&delta * &delta2);
    }
    let denom = (draws.max(2) - 1) as f64;
    let std = m2.mapv(|v| (v / denom).sqrt());
    (mean, std)
}
