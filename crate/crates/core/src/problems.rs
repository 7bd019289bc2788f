//! Concrete objectives: regularized hinge loss, SVM, max-affine functions with
//! a known optimum, and diagonal quadratics for the smooth baseline.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::data::Dataset;
use crate::error::{require_dim, require_positive, Error, Result};
use crate::geometry::{project, FeasibleSet, Regularizer};
use crate::linalg::{norm, Vector};
use crate::oracle::{trial_rng, Oracle, TrialRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HingeMode {
    /// `lambda ||w||_1 + mean hinge`; the l1 term is the composite regularizer.
    L1,
    /// `(lambda/2)||w||^2 + mean hinge`, folded into the oracle.
    L2Svm,
}

/// Which hinge terms a call averages over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Selection {
    Index(usize),
    Full,
}

#[derive(Debug, Clone)]
pub struct HingeProblem {
    data: Arc<Dataset>,
    lambda: f64,
    mode: HingeMode,
}

impl HingeProblem {
    pub fn new(data: Arc<Dataset>, lambda: f64, mode: HingeMode) -> Result<Self> {
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "lambda",
                value: lambda,
                reason: "must be >= 0",
            });
        }
        if mode == HingeMode::L2Svm {
            require_positive("lambda", lambda)?;
        }
        Ok(HingeProblem { data, lambda, mode })
    }

    pub fn data(&self) -> &Dataset {
        &self.data
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn mode(&self) -> HingeMode {
        self.mode
    }

    /// Regularizer kept outside the oracle.
    pub fn regularizer(&self) -> Regularizer {
        match self.mode {
            HingeMode::L1 if self.lambda > 0.0 => Regularizer::L1(self.lambda),
            _ => Regularizer::Zero,
        }
    }

    fn check(&self, w: &Vector) {
        assert_eq!(
            w.len(),
            self.data.dimension(),
            "hinge problem called with a vector of the wrong dimension"
        );
    }

    /// Adds the hinge term of sample `i` to `(value, g)` with weight `scale`.
    fn accumulate(&self, i: usize, w: &Vector, scale: f64, value: &mut f64, g: &mut Vector) {
        let s = &self.data.rows()[i];
        let margin = s.y * s.x.dot_unchecked(w);
        if margin < 1.0 {
            *value += scale * (1.0 - margin);
            s.x.scaled_add_to(-scale * s.y, g);
        }
    }

    /// Hinge value and subgradient (no regularizer) for one sample or the mean.
    ///
    /// The subgradient of an active-at-the-kink term (margin exactly 1) is zero.
    pub fn hinge_value_subgrad(&self, w: &Vector, sel: Selection) -> Result<(f64, Vector)> {
        require_dim(self.data.dimension(), w.len())?;
        let mut value = 0.0;
        let mut g = Vector::zeros(w.len());
        match sel {
            Selection::Index(i) => {
                if i >= self.data.len() {
                    return Err(Error::InvalidParameter {
                        name: "index",
                        value: i as f64,
                        reason: "must be below the number of samples",
                    });
                }
                self.accumulate(i, w, 1.0, &mut value, &mut g);
            }
            Selection::Full => {
                let scale = 1.0 / self.data.len() as f64;
                for i in 0..self.data.len() {
                    self.accumulate(i, w, scale, &mut value, &mut g);
                }
            }
        }
        Ok((value, g))
    }

    /// Objective including the regularizer of the chosen mode.
    pub fn full_objective(&self, w: &Vector) -> Result<f64> {
        let (hinge, _) = self.hinge_value_subgrad(w, Selection::Full)?;
        Ok(hinge
            + match self.mode {
                HingeMode::L1 => self.lambda * w.iter().map(|x| x.abs()).sum::<f64>(),
                HingeMode::L2Svm => 0.5 * self.lambda * w.dot(w),
            })
    }

    pub fn max_row_norm(&self) -> f64 {
        self.data.stats().max_row_norm
    }

    /// Subgradient bound of the oracle part over `set`.
    pub fn lipschitz_on(&self, set: &FeasibleSet) -> Option<f64> {
        let base = self.max_row_norm();
        match self.mode {
            HingeMode::L1 => Some(base),
            HingeMode::L2Svm => set.radius().map(|r| base + self.lambda * r),
        }
    }

    fn svm_term(&self) -> f64 {
        match self.mode {
            HingeMode::L1 => 0.0,
            HingeMode::L2Svm => self.lambda,
        }
    }
}

impl Oracle for HingeProblem {
    fn dim(&self) -> usize {
        self.data.dimension()
    }

    fn value(&self, w: &Vector) -> f64 {
        self.check(w);
        let (hinge, _) = self
            .hinge_value_subgrad(w, Selection::Full)
            .expect("checked dimension");
        hinge + 0.5 * self.svm_term() * w.dot(w)
    }

    fn subgradient(&self, w: &Vector) -> Vector {
        self.check(w);
        let (_, mut g) = self
            .hinge_value_subgrad(w, Selection::Full)
            .expect("checked dimension");
        let l = self.svm_term();
        if l > 0.0 {
            g.scaled_add(l, w);
        }
        g
    }

    fn stochastic_subgradient(&self, w: &Vector, rng: &mut TrialRng) -> Vector {
        self.check(w);
        let i = rng.random_range(0..self.data.len());
        let mut g = Vector::zeros(w.len());
        let mut value = 0.0;
        self.accumulate(i, w, 1.0, &mut value, &mut g);
        let l = self.svm_term();
        if l > 0.0 {
            g.scaled_add(l, w);
        }
        g
    }

    fn strong_convexity(&self) -> f64 {
        self.svm_term()
    }

    fn lipschitz_bound(&self) -> Option<f64> {
        match self.mode {
            HingeMode::L1 => Some(self.max_row_norm()),
            HingeMode::L2Svm => None,
        }
    }
}

/// `max_i (<a_i, w> + b_i) + (mu/2)||w||^2` with a certified minimizer.
#[derive(Debug, Clone)]
pub struct MaxAffineProblem {
    slopes: Vec<Vector>,
    offsets: Vec<f64>,
    mu: f64,
    wstar: Vector,
    fstar: f64,
    noise_std: f64,
}

impl MaxAffineProblem {
    /// Builds `max` over the pieces `<a, w> + b` and `<-a, w> + b` for every
    /// pair `(a, b)`, plus optional extra pieces. Pairs sharing the largest
    /// offset certify `w* = 0`; extra pieces must stay strictly below it at 0.
    pub fn from_pairs(pairs: &[(Vector, f64)], extra: &[(Vector, f64)], mu: f64) -> Result<Self> {
        let Some((first, _)) = pairs.first() else {
            return Err(Error::Config(
                "max-affine problem needs at least one pair".into(),
            ));
        };
        let n = first.len();
        if !(mu.is_finite() && mu >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "mu",
                value: mu,
                reason: "must be >= 0",
            });
        }
        let top = pairs.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
        if extra.iter().any(|p| p.1 >= top) {
            return Err(Error::Config(
                "extra pieces must lie below the paired maximum at 0".into(),
            ));
        }
        let mut slopes = Vec::new();
        let mut offsets = Vec::new();
        for (a, b) in pairs {
            require_dim(n, a.len())?;
            slopes.push(a.clone());
            offsets.push(*b);
            slopes.push(-a);
            offsets.push(*b);
        }
        for (a, b) in extra {
            require_dim(n, a.len())?;
            slopes.push(a.clone());
            offsets.push(*b);
        }
        let problem = MaxAffineProblem {
            slopes,
            offsets,
            mu,
            wstar: Vector::zeros(n),
            fstar: top,
            noise_std: 0.0,
        };
        debug_assert!(problem.certify_optimality());
        Ok(problem)
    }

    /// `f(w) = |w|` in one dimension.
    pub fn abs_value() -> Self {
        Self::from_pairs(&[(Vector::from_elem(1, 1.0), 0.0)], &[], 0.0).expect("valid pieces")
    }

    /// Adds zero-mean Gaussian noise of the given standard deviation to every
    /// coordinate of stochastic subgradients.
    pub fn with_noise(mut self, std: f64) -> Result<Self> {
        if !(std.is_finite() && std >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "noise_std",
                value: std,
                reason: "must be >= 0",
            });
        }
        self.noise_std = std;
        Ok(self)
    }

    pub fn pieces(&self) -> impl Iterator<Item = (&Vector, f64)> {
        self.slopes.iter().zip(self.offsets.iter().copied())
    }

    pub fn num_pieces(&self) -> usize {
        self.slopes.len()
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn wstar(&self) -> &Vector {
        &self.wstar
    }

    pub fn fstar(&self) -> f64 {
        self.fstar
    }

    /// `max_i ||a_i|| + mu R`, a subgradient bound over a ball of radius `R`.
    pub fn lipschitz_on_ball(&self, radius: f64) -> f64 {
        self.max_slope_norm() + self.mu * radius
    }

    fn max_slope_norm(&self) -> f64 {
        self.slopes.iter().map(norm).fold(0.0, f64::max)
    }

    fn active(&self, w: &Vector) -> (usize, f64) {
        let mut best = (0, f64::NEG_INFINITY);
        for (i, (a, b)) in self.pieces().enumerate() {
            let v = a.dot(w) + b;
            if v > best.1 {
                best = (i, v);
            }
        }
        best
    }

    /// Checks `f(w*) = f*` and that two active pieces have opposite
    /// gradients (after adding `mu w*`), so zero is in their convex hull.
    pub fn certify_optimality(&self) -> bool {
        if (self.value(&self.wstar) - self.fstar).abs() > 1e-12 {
            return false;
        }
        let active: Vec<Vector> = self
            .pieces()
            .filter(|(a, b)| a.dot(&self.wstar) + b >= self.fstar - 1e-12)
            .map(|(a, _)| a + &(&self.wstar * self.mu))
            .collect();
        active.iter().any(|g| g.iter().all(|x| *x == 0.0))
            || active.iter().enumerate().any(|(i, g)| {
                active[i + 1..].iter().any(|h| {
                    // zero lies on the segment [g, h] iff g and h are antiparallel
                    let gh = g.dot(h);
                    let ng = norm(g);
                    let nh = norm(h);
                    (gh + ng * nh).abs() <= 1e-12 * (ng * nh).max(1.0)
                })
            })
    }
}

/// Random instance with `num_pieces / 2` symmetric pairs sharing the top offset
/// and, for odd counts, one extra piece strictly below it at the origin.
/// Slopes are standard normal, the shared offset uniform in [0, 1).
pub fn make_max_affine(
    dimension: usize,
    num_pieces: usize,
    mu: f64,
    seed: u64,
) -> Result<MaxAffineProblem> {
    if num_pieces < 2 {
        return Err(Error::InvalidParameter {
            name: "num_pieces",
            value: num_pieces as f64,
            reason: "must be at least 2",
        });
    }
    if dimension == 0 {
        return Err(Error::InvalidParameter {
            name: "dimension",
            value: 0.0,
            reason: "must be positive",
        });
    }
    let mut rng = trial_rng(seed);
    let b: f64 = rng.random();
    let draw = |rng: &mut TrialRng| -> Vector {
        Vector::from_shape_fn(dimension, |_| StandardNormal.sample(rng))
    };
    let pairs: Vec<(Vector, f64)> = (0..num_pieces / 2).map(|_| (draw(&mut rng), b)).collect();
    let extra: Vec<(Vector, f64)> = if num_pieces % 2 == 1 {
        vec![(draw(&mut rng), b - 1.0 - rng.random::<f64>())]
    } else {
        Vec::new()
    };
    MaxAffineProblem::from_pairs(&pairs, &extra, mu)
}

impl Oracle for MaxAffineProblem {
    fn dim(&self) -> usize {
        self.wstar.len()
    }

    fn value(&self, w: &Vector) -> f64 {
        self.active(w).1 + 0.5 * self.mu * w.dot(w)
    }

    /// Gradient of the first maximizing piece.
    fn subgradient(&self, w: &Vector) -> Vector {
        let (i, _) = self.active(w);
        let mut g = self.slopes[i].clone();
        if self.mu > 0.0 {
            g.scaled_add(self.mu, w);
        }
        g
    }

    fn stochastic_subgradient(&self, w: &Vector, rng: &mut TrialRng) -> Vector {
        let mut g = self.subgradient(w);
        if self.noise_std > 0.0 {
            let noise = Normal::new(0.0, self.noise_std).expect("validated std");
            g.mapv_inplace(|x| x + noise.sample(rng));
        }
        g
    }

    fn strong_convexity(&self) -> f64 {
        self.mu
    }

    fn lipschitz_bound(&self) -> Option<f64> {
        (self.mu == 0.0).then(|| self.max_slope_norm())
    }

    fn variance_bound(&self) -> Option<f64> {
        Some(self.dim() as f64 * self.noise_std * self.noise_std)
    }
}

/// `(1/2) sum_j d_j w_j^2` with a positive diagonal `d`.
#[derive(Debug, Clone)]
pub struct Quadratic {
    diag: Vector,
}

impl Quadratic {
    pub fn new(diag: Vector) -> Result<Self> {
        if diag.is_empty() {
            return Err(Error::InvalidParameter {
                name: "dimension",
                value: 0.0,
                reason: "must be positive",
            });
        }
        for &d in &diag {
            require_positive("curvature", d)?;
        }
        Ok(Quadratic { diag })
    }

    /// `(L/2)||w||^2`.
    pub fn isotropic(dimension: usize, lipschitz: f64) -> Result<Self> {
        Self::new(Vector::from_elem(dimension, lipschitz))
    }

    /// Curvatures log-spaced from `L / condition` up to `L`.
    pub fn log_spectrum(dimension: usize, lipschitz: f64, condition: f64) -> Result<Self> {
        require_positive("condition", condition)?;
        let n = dimension.max(1);
        let diag = Vector::from_shape_fn(n, |j| {
            let frac = if n == 1 {
                1.0
            } else {
                j as f64 / (n - 1) as f64
            };
            lipschitz * condition.powf(frac - 1.0)
        });
        Self::new(diag)
    }

    /// Gradient Lipschitz constant `max_j d_j`.
    pub fn smoothness(&self) -> f64 {
        self.diag.iter().copied().fold(0.0, f64::max)
    }

    pub fn diag(&self) -> &Vector {
        &self.diag
    }
}

impl Oracle for Quadratic {
    fn dim(&self) -> usize {
        self.diag.len()
    }

    fn value(&self, w: &Vector) -> f64 {
        0.5 * (&self.diag * w).dot(w)
    }

    fn subgradient(&self, w: &Vector) -> Vector {
        &self.diag * w
    }

    fn strong_convexity(&self) -> f64 {
        self.diag.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// `F = f + r` over `Q`, with optional known optimum.
#[derive(Clone)]
pub struct Composite {
    pub oracle: Arc<dyn Oracle>,
    pub regularizer: Regularizer,
    pub set: FeasibleSet,
    pub wstar: Option<Vector>,
    pub fstar: Option<f64>,
    /// Subgradient bound of `f` over `Q`, if known.
    pub lipschitz: Option<f64>,
}

impl fmt::Debug for Composite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Composite")
            .field("dim", &self.oracle.dim())
            .field("regularizer", &self.regularizer)
            .field("set", &self.set)
            .field("fstar", &self.fstar)
            .finish()
    }
}

impl Composite {
    pub fn new(
        oracle: Arc<dyn Oracle>,
        regularizer: Regularizer,
        set: FeasibleSet,
    ) -> Result<Self> {
        regularizer.validate()?;
        if let FeasibleSet::Ball {
            center: Some(c), ..
        } = &set
        {
            require_dim(oracle.dim(), c.len())?;
        }
        let lipschitz = oracle.lipschitz_bound();
        Ok(Composite {
            oracle,
            regularizer,
            set,
            wstar: None,
            fstar: None,
            lipschitz,
        })
    }

    pub fn unconstrained(oracle: Arc<dyn Oracle>) -> Self {
        let lipschitz = oracle.lipschitz_bound();
        Composite {
            oracle,
            regularizer: Regularizer::Zero,
            set: FeasibleSet::WholeSpace,
            wstar: None,
            fstar: None,
            lipschitz,
        }
    }

    /// Max-affine problem with its certified optimum; the bound `M` accounts
    /// for the quadratic term over a ball set.
    pub fn max_affine(problem: MaxAffineProblem, set: FeasibleSet) -> Result<Self> {
        let wstar = problem.wstar().clone();
        let fstar = problem.fstar();
        let lipschitz = match set.radius() {
            Some(r) => Some(problem.lipschitz_on_ball(r + set_center_norm(&set))),
            None => problem.lipschitz_bound(),
        };
        let mut c = Composite::new(Arc::new(problem), Regularizer::Zero, set)?;
        c.wstar = Some(wstar);
        c.fstar = Some(fstar);
        c.lipschitz = lipschitz;
        Ok(c)
    }

    pub fn hinge(problem: HingeProblem, set: FeasibleSet) -> Result<Self> {
        let r = problem.regularizer();
        let lipschitz = problem.lipschitz_on(&set);
        let mut c = Composite::new(Arc::new(problem), r, set)?;
        c.lipschitz = lipschitz;
        Ok(c)
    }

    pub fn quadratic(problem: Quadratic) -> Self {
        let n = problem.dim();
        let mut c = Composite::unconstrained(Arc::new(problem));
        c.wstar = Some(Vector::zeros(n));
        c.fstar = Some(0.0);
        c
    }

    pub fn dim(&self) -> usize {
        self.oracle.dim()
    }

    /// `f(w) + r(w)`.
    pub fn objective(&self, w: &Vector) -> f64 {
        self.oracle.value(w) + self.regularizer.value(w)
    }

    /// Projects `w` onto the feasible set.
    pub fn feasible(&self, w: &Vector) -> Result<Vector> {
        project(&self.set, w)
    }
}

fn set_center_norm(set: &FeasibleSet) -> f64 {
    match set {
        FeasibleSet::Ball {
            center: Some(c), ..
        } => norm(c),
        _ => 0.0,
    }
}
