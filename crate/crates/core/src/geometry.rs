//! Feasible sets, simple regularizers, and the closed-form subproblems
//!
//! ```text
//! argmin_{w in Q}  a<g, w> + a r(w) + 1/2 ||w - y||^2                       (general)
//! argmin_{w in Q}  a<g, w> + a r(w) + 1/2 ||w - y||^2 + a mu/(2 theta) ||w - w_t||^2   (strong)
//! ```
//!
//! Only combinations with an exact minimizer are accepted: a zero regularizer
//! on any set, or an l1 / squared-l2 regularizer on the whole space.

use std::fmt;

use crate::error::{require_dim, require_positive, Error, Result};
use crate::linalg::{norm, Vector};

#[derive(Debug, Clone, PartialEq, Default)]
pub enum FeasibleSet {
    #[default]
    WholeSpace,
    /// `{w : ||w - center|| <= radius}`; `None` center means the origin.
    Ball { radius: f64, center: Option<Vector> },
}

impl FeasibleSet {
    pub fn ball(radius: f64) -> Result<Self> {
        require_positive("radius", radius)?;
        Ok(FeasibleSet::Ball {
            radius,
            center: None,
        })
    }

    pub fn ball_at(radius: f64, center: Vector) -> Result<Self> {
        require_positive("radius", radius)?;
        Ok(FeasibleSet::Ball {
            radius,
            center: Some(center),
        })
    }

    /// Pegasos feasible set `{||w|| <= 1/sqrt(lambda)}`.
    pub fn pegasos(lambda: f64) -> Result<Self> {
        require_positive("lambda", lambda)?;
        Self::ball(1.0 / lambda.sqrt())
    }

    pub fn is_whole_space(&self) -> bool {
        matches!(self, FeasibleSet::WholeSpace)
    }

    pub fn radius(&self) -> Option<f64> {
        match self {
            FeasibleSet::WholeSpace => None,
            FeasibleSet::Ball { radius, .. } => Some(*radius),
        }
    }

    /// Distance from `w` to the set.
    pub fn distance(&self, w: &Vector) -> f64 {
        match project(self, w) {
            Ok(p) => norm(&(w - &p)),
            Err(_) => f64::INFINITY,
        }
    }
}

impl fmt::Display for FeasibleSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FeasibleSet::WholeSpace => write!(f, "whole-space"),
            FeasibleSet::Ball {
                radius,
                center: None,
            } => write!(f, "l2-ball(R={radius})"),
            FeasibleSet::Ball { radius, .. } => write!(f, "l2-ball(R={radius}, centered)"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Regularizer {
    #[default]
    Zero,
    /// `lambda ||w||_1`
    L1(f64),
    /// `(lambda/2) ||w||^2`
    SquaredL2(f64),
}

impl Regularizer {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Regularizer::Zero => Ok(()),
            Regularizer::L1(l) | Regularizer::SquaredL2(l) => {
                if l.is_finite() && l >= 0.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter {
                        name: "lambda",
                        value: l,
                        reason: "must be >= 0",
                    })
                }
            }
        }
    }

    pub fn value(&self, w: &Vector) -> f64 {
        match *self {
            Regularizer::Zero => 0.0,
            Regularizer::L1(l) => l * w.iter().map(|x| x.abs()).sum::<f64>(),
            Regularizer::SquaredL2(l) => 0.5 * l * w.dot(w),
        }
    }

    pub fn strong_convexity(&self) -> f64 {
        match *self {
            Regularizer::SquaredL2(l) => l,
            _ => 0.0,
        }
    }

    /// A subgradient of `r` at `w`; `sign(0) = 0` for the l1 term.
    pub fn subgradient(&self, w: &Vector) -> Vector {
        match *self {
            Regularizer::Zero => Vector::zeros(w.len()),
            Regularizer::L1(l) => w.mapv(|x| if x == 0.0 { 0.0 } else { l * x.signum() }),
            Regularizer::SquaredL2(l) => w * l,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Regularizer::Zero)
    }
}

impl fmt::Display for Regularizer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Regularizer::Zero => write!(f, "zero"),
            Regularizer::L1(l) => write!(f, "l1({l})"),
            Regularizer::SquaredL2(l) => write!(f, "squared-l2({l})"),
        }
    }
}

/// Euclidean projection onto `set`.
pub fn project(set: &FeasibleSet, w: &Vector) -> Result<Vector> {
    match set {
        FeasibleSet::WholeSpace => Ok(w.clone()),
        FeasibleSet::Ball { radius, center } => {
            let mut out = w.clone();
            project_ball_in_place(&mut out, *radius, center.as_ref())?;
            Ok(out)
        }
    }
}

pub(crate) fn project_in_place(set: &FeasibleSet, w: &mut Vector) -> Result<()> {
    match set {
        FeasibleSet::WholeSpace => Ok(()),
        FeasibleSet::Ball { radius, center } => project_ball_in_place(w, *radius, center.as_ref()),
    }
}

fn project_ball_in_place(w: &mut Vector, radius: f64, center: Option<&Vector>) -> Result<()> {
    match center {
        None => {
            let n = norm(w);
            if n > radius {
                *w *= radius / n;
            }
        }
        Some(c) => {
            require_dim(c.len(), w.len())?;
            let mut d = &*w - c;
            let n = norm(&d);
            if n > radius {
                d *= radius / n;
                *w = c + &d;
            }
        }
    }
    Ok(())
}

/// Soft-thresholding: `sign(v_j) max(|v_j| - tau, 0)`, with exact zeros.
pub fn prox_l1(v: &Vector, tau: f64) -> Result<Vector> {
    if !(tau.is_finite() && tau >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "tau",
            value: tau,
            reason: "must be >= 0",
        });
    }
    Ok(v.mapv(|x| soft_threshold(x, tau)))
}

#[inline]
pub fn soft_threshold(x: f64, tau: f64) -> f64 {
    if x > tau {
        x - tau
    } else if x < -tau {
        x + tau
    } else {
        0.0
    }
}

pub fn check_supported(r: &Regularizer, set: &FeasibleSet) -> Result<()> {
    r.validate()?;
    if r.is_zero() || set.is_whole_space() {
        Ok(())
    } else {
        Err(Error::UnsupportedComposite {
            regularizer: r.to_string(),
            set: set.to_string(),
        })
    }
}

/// Minimizer of `a<g,w> + r_step(w) + 1/2||w - v||^2` where `v = point - a g`,
/// evaluated in place on `v`.
fn prox_in_place(v: &mut Vector, a: f64, r: &Regularizer, set: &FeasibleSet) -> Result<()> {
    match *r {
        Regularizer::Zero => project_in_place(set, v),
        Regularizer::L1(l) => {
            let tau = a * l;
            v.mapv_inplace(|x| soft_threshold(x, tau));
            Ok(())
        }
        Regularizer::SquaredL2(l) => {
            *v /= 1.0 + a * l;
            Ok(())
        }
    }
}

/// `argmin_{w in Q} a<g,w> + a r(w) + 1/2||w - y||^2`.
pub fn composite_step_general(
    y: &Vector,
    g: &Vector,
    a: f64,
    r: &Regularizer,
    set: &FeasibleSet,
) -> Result<Vector> {
    require_positive("a", a)?;
    require_dim(y.len(), g.len())?;
    check_supported(r, set)?;
    let mut v = y.clone();
    v.scaled_add(-a, g);
    prox_in_place(&mut v, a, r, set)?;
    Ok(v)
}

fn check_theta(theta: f64) -> Result<()> {
    if theta > 0.0 && theta <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name: "theta",
            value: theta,
            reason: "must lie in (0, 1]",
        })
    }
}

/// `argmin_{w in Q} a<g,w> + a r(w) + 1/2||w - y||^2 + (a mu / 2 theta)||w - w_t||^2`.
///
/// Completing the square gives `kappa = 1 + a mu/theta` and
/// `c = (theta y + a mu w_t)/(theta + a mu)`; the result is the general step
/// from `c` with step `a/kappa`.
#[allow(clippy::too_many_arguments)]
pub fn composite_step_strong(
    y: &Vector,
    w_t: &Vector,
    g: &Vector,
    a: f64,
    theta: f64,
    mu: f64,
    r: &Regularizer,
    set: &FeasibleSet,
) -> Result<Vector> {
    require_positive("a", a)?;
    require_positive("mu", mu)?;
    check_theta(theta)?;
    require_dim(y.len(), w_t.len())?;
    require_dim(y.len(), g.len())?;
    check_supported(r, set)?;
    let denom = theta + a * mu;
    let step = a * theta / denom;
    let mut v = y * (theta / denom);
    v.scaled_add(a * mu / denom, w_t);
    v.scaled_add(-step, g);
    prox_in_place(&mut v, step, r, set)?;
    Ok(v)
}

/// Projected convex-combination step of the strongly convex accelerated method:
/// `P[(theta y + a mu w_t - a theta g)/(theta + a mu)]`.
pub fn strong_projection_step(
    y: &Vector,
    w_t: &Vector,
    g: &Vector,
    a: f64,
    theta: f64,
    mu: f64,
    set: &FeasibleSet,
) -> Result<Vector> {
    require_positive("a", a)?;
    require_positive("mu", mu)?;
    check_theta(theta)?;
    require_dim(y.len(), w_t.len())?;
    require_dim(y.len(), g.len())?;
    let (wy, ww) = strong_weights(a, theta, mu);
    let mut v = y * wy;
    v.scaled_add(ww, w_t);
    v.scaled_add(-a * wy, g);
    project_in_place(set, &mut v)?;
    Ok(v)
}

/// Combination weights `(theta/(theta + a mu), a mu/(theta + a mu))`.
pub fn strong_weights(a: f64, theta: f64, mu: f64) -> (f64, f64) {
    let denom = theta + a * mu;
    (theta / denom, a * mu / denom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_vec(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vector {
        (0..n).map(|_| rng.random_range(-scale..scale)).collect()
    }

    fn general_objective(w: &Vector, y: &Vector, g: &Vector, a: f64, r: &Regularizer) -> f64 {
        a * g.dot(w) + a * r.value(w) + 0.5 * (w - y).dot(&(w - y))
    }

    #[test]
    fn whole_space_projection_is_identity() {
        let w = array![5.0, -2.0];
        assert_eq!(project(&FeasibleSet::WholeSpace, &w).unwrap(), w);
    }

    #[test]
    fn ball_projection_scales_radially() {
        let p = project(&FeasibleSet::ball(1.0).unwrap(), &array![3.0, 4.0]).unwrap();
        assert_abs_diff_eq!(p[0], 0.6, epsilon = 1e-15);
        assert_abs_diff_eq!(p[1], 0.8, epsilon = 1e-15);
    }

    #[test]
    fn centered_ball_projection() {
        let set = FeasibleSet::ball_at(1.0, array![1.0, 1.0]).unwrap();
        let p = project(&set, &array![1.0, 4.0]).unwrap();
        assert_abs_diff_eq!(p[0], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p[1], 2.0, epsilon = 1e-15);
        let inside = array![1.5, 1.2];
        assert_eq!(project(&set, &inside).unwrap(), inside);
    }

    #[test]
    fn ball_projection_beats_sampled_feasible_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let set = FeasibleSet::ball(1.5).unwrap();
        for _ in 0..5 {
            let w = random_vec(&mut rng, 3, 4.0);
            let p = project(&set, &w).unwrap();
            let best = norm(&(&w - &p));
            for _ in 0..10_000 {
                let mut x = random_vec(&mut rng, 3, 1.5);
                let nx = norm(&x);
                if nx > 1.5 {
                    x *= 1.5 / nx;
                }
                assert!(norm(&(&w - &x)) >= best - 1e-6);
            }
        }
    }

    #[test]
    fn prox_l1_examples() {
        assert_eq!(
            prox_l1(&array![3.0, -0.5, 0.0], 1.0).unwrap(),
            array![2.0, 0.0, 0.0]
        );
        let v = array![1.5, -2.0, 0.3];
        assert_eq!(prox_l1(&v, 0.0).unwrap(), v);
        assert!(prox_l1(&v, -1.0).is_err());
    }

    #[test]
    fn composite_general_examples() {
        let out = composite_step_general(
            &array![1.0],
            &array![1.0],
            0.125,
            &Regularizer::Zero,
            &FeasibleSet::WholeSpace,
        )
        .unwrap();
        assert_eq!(out, array![0.875]);

        // y - a g = [3, -0.5] with a = 1, threshold 2.
        let out = composite_step_general(
            &array![3.0, -0.5],
            &array![0.0, 0.0],
            1.0,
            &Regularizer::L1(2.0),
            &FeasibleSet::WholeSpace,
        )
        .unwrap();
        assert_eq!(out, array![1.0, 0.0]);
    }

    #[test]
    fn unsupported_combination_is_rejected() {
        let err = composite_step_general(
            &array![1.0],
            &array![1.0],
            0.5,
            &Regularizer::L1(0.1),
            &FeasibleSet::ball(1.0).unwrap(),
        );
        assert!(matches!(err, Err(Error::UnsupportedComposite { .. })));
        let err = composite_step_strong(
            &array![1.0],
            &array![1.0],
            &array![1.0],
            0.5,
            1.0,
            1.0,
            &Regularizer::SquaredL2(0.1),
            &FeasibleSet::ball(1.0).unwrap(),
        );
        assert!(matches!(err, Err(Error::UnsupportedComposite { .. })));
    }

    #[test]
    fn strong_step_rejects_bad_parameters() {
        let v = array![1.0];
        let r = Regularizer::Zero;
        let q = FeasibleSet::WholeSpace;
        assert!(composite_step_strong(&v, &v, &v, 1.0, 1.0, 0.0, &r, &q).is_err());
        assert!(composite_step_strong(&v, &v, &v, 0.0, 1.0, 1.0, &r, &q).is_err());
        assert!(composite_step_strong(&v, &v, &v, 1.0, 1.5, 1.0, &r, &q).is_err());
        assert!(strong_projection_step(&v, &v, &v, 1.0, 0.0, 1.0, &q).is_err());
    }

    #[test]
    fn composite_general_beats_perturbations() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for r in [
            Regularizer::Zero,
            Regularizer::L1(0.7),
            Regularizer::SquaredL2(1.3),
        ] {
            for _ in 0..5 {
                let y = random_vec(&mut rng, 4, 3.0);
                let g = random_vec(&mut rng, 4, 2.0);
                let a = rng.random_range(0.05..2.0);
                let w = composite_step_general(&y, &g, a, &r, &FeasibleSet::WholeSpace).unwrap();
                let best = general_objective(&w, &y, &g, a, &r);
                assert!(best <= general_objective(&y, &y, &g, a, &r) + 1e-9);
                for _ in 0..10_000 {
                    let cand = &w + &random_vec(&mut rng, 4, 0.5);
                    assert!(best <= general_objective(&cand, &y, &g, a, &r) + 1e-9);
                }
            }
        }
    }

    #[test]
    fn strong_step_matches_general_as_mu_vanishes() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for r in [
            Regularizer::Zero,
            Regularizer::L1(0.4),
            Regularizer::SquaredL2(0.9),
        ] {
            let y = random_vec(&mut rng, 5, 2.0);
            let wt = random_vec(&mut rng, 5, 2.0);
            let g = random_vec(&mut rng, 5, 1.0);
            let a = 0.3;
            let q = FeasibleSet::WholeSpace;
            let s = composite_step_strong(&y, &wt, &g, a, 0.5, 1e-12, &r, &q).unwrap();
            let gen = composite_step_general(&y, &g, a, &r, &q).unwrap();
            for (p, q) in s.iter().zip(gen.iter()) {
                assert!((p - q).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn strong_step_center_ignores_mu_when_y_equals_wt() {
        let y = array![0.3, -1.2];
        let zero = Vector::zeros(2);
        for mu in [0.01, 1.0, 100.0] {
            // With g = 0 and r = 0 the minimizer is c, and c = y.
            let out = composite_step_strong(
                &y,
                &y,
                &zero,
                0.7,
                0.4,
                mu,
                &Regularizer::Zero,
                &FeasibleSet::WholeSpace,
            )
            .unwrap();
            assert_abs_diff_eq!(out[0], y[0], epsilon = 1e-15);
            assert_abs_diff_eq!(out[1], y[1], epsilon = 1e-15);
        }
    }

    #[test]
    fn strong_projection_weights_sum_to_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            let (a, th, mu) = (
                rng.random_range(1e-4..10.0),
                rng.random_range(1e-3..1.0),
                rng.random_range(1e-4..10.0),
            );
            let (p, q) = strong_weights(a, th, mu);
            assert!((p + q - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn strong_projection_fixed_point() {
        let y = array![0.5, -0.25];
        let out = strong_projection_step(
            &y,
            &y,
            &Vector::zeros(2),
            0.3,
            0.6,
            2.0,
            &FeasibleSet::WholeSpace,
        )
        .unwrap();
        assert_eq!(out, y);
    }

    #[test]
    fn strong_projection_equals_zero_regularizer_composite() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for set in [FeasibleSet::WholeSpace, FeasibleSet::ball(0.8).unwrap()] {
            for _ in 0..200 {
                let y = random_vec(&mut rng, 4, 2.0);
                let wt = random_vec(&mut rng, 4, 2.0);
                let g = random_vec(&mut rng, 4, 2.0);
                let a = rng.random_range(1e-3..3.0);
                let th = rng.random_range(0.01..1.0);
                let mu = rng.random_range(1e-3..5.0);
                let p = strong_projection_step(&y, &wt, &g, a, th, mu, &set).unwrap();
                let c = composite_step_strong(&y, &wt, &g, a, th, mu, &Regularizer::Zero, &set)
                    .unwrap();
                for (x, z) in p.iter().zip(c.iter()) {
                    assert!((x - z).abs() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn regularizer_values() {
        let w = array![1.0, -2.0];
        assert_eq!(Regularizer::Zero.value(&w), 0.0);
        assert_eq!(Regularizer::L1(0.5).value(&w), 1.5);
        assert_eq!(Regularizer::SquaredL2(2.0).value(&w), 5.0);
        assert_eq!(Regularizer::SquaredL2(2.0).strong_convexity(), 2.0);
        assert_eq!(Regularizer::L1(2.0).strong_convexity(), 0.0);
        assert_eq!(Regularizer::L1(3.0).value(&Vector::zeros(3)), 0.0);
        assert!(Regularizer::L1(-1.0).validate().is_err());
    }
}
