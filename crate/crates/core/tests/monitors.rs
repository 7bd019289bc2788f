use npsg::prelude::*;
use npsg::problems::make_max_affine;
use npsg::verify::{run_monitored, Eq7Monitor, Lemma2Monitor, Monitor, SmoothBoundMonitor};

fn run(budget: usize, w0: Vector) -> RunOptions {
    RunOptions {
        budget,
        sampling: Sampling::Deterministic,
        w0: Some(w0),
        ..RunOptions::default()
    }
}

fn single(
    solver: &SolverConfig,
    problem: &Composite,
    opts: &RunOptions,
    m: Box<dyn Monitor>,
) -> npsg::verify::MonitorReport {
    run_monitored(solver, problem, opts, vec![m])
        .unwrap()
        .remove(0)
}

#[test]
fn one_step_inequality_needs_twice_the_lipschitz_constant() {
    let p = make_max_affine(20, 10, 0.0, 1).unwrap();
    let problem = Composite::max_affine(p, FeasibleSet::WholeSpace).unwrap();
    let (wstar, fstar, m) = (
        problem.wstar.clone().unwrap(),
        problem.fstar.unwrap(),
        problem.lipschitz.unwrap(),
    );
    let solver = SolverConfig::new(SolverKind::NesterovPsg);
    let opts = run(20_000, Vector::from_elem(20, 1.0));

    let with_m = single(
        &solver,
        &problem,
        &opts,
        Box::new(Lemma2Monitor::new(wstar.clone(), fstar, m, 1e-9)),
    );
    let with_2m = single(
        &solver,
        &problem,
        &opts,
        Box::new(Lemma2Monitor::new(wstar.clone(), fstar, 2.0 * m, 1e-9)),
    );
    let with_half = single(
        &solver,
        &problem,
        &opts,
        Box::new(Lemma2Monitor::new(wstar, fstar, m / 2.0, 1e-9)),
    );
    assert!(with_2m.passed, "{with_2m:?}");
    assert!(!with_half.passed);
    // The constant M alone is violated where the iterate crosses a kink.
    assert!(with_m.violations > 0 && with_m.violations < with_half.violations);
}

#[test]
fn psg_cumulative_bound_and_its_negative_control() {
    let problem =
        Composite::max_affine(MaxAffineProblem::abs_value(), FeasibleSet::WholeSpace).unwrap();
    let solver = SolverConfig::new(SolverKind::Psg);
    let opts = run(10_000, Vector::from_elem(1, 1.0));
    let wstar = problem.wstar.clone().unwrap();
    let ok = single(
        &solver,
        &problem,
        &opts,
        Box::new(Eq7Monitor::new(wstar.clone(), 0.0, 1e-9)),
    );
    assert!(ok.passed && ok.checks == 10_000, "{ok:?}");
    let bad = single(
        &solver,
        &problem,
        &opts,
        Box::new(Eq7Monitor::new(wstar, -1.0, 1e-9)),
    );
    assert!(!bad.passed);
}

#[test]
fn smooth_bound_and_its_negative_control() {
    let problem = Composite::quadratic(Quadratic::log_spectrum(10, 2.0, 1e4).unwrap());
    let solver = SolverConfig::new(SolverKind::SmoothAccelerated).with_smoothness(2.0);
    let opts = run(10_000, Vector::from_elem(10, 1.0));
    let ok = single(
        &solver,
        &problem,
        &opts,
        Box::new(SmoothBoundMonitor::new(Vector::zeros(10), 0.0, 2.0, 1e-9)),
    );
    assert!(ok.passed, "{ok:?}");
    let bad = single(
        &solver,
        &problem,
        &opts,
        Box::new(SmoothBoundMonitor::new(Vector::zeros(10), 0.0, 0.02, 1e-9)),
    );
    assert!(!bad.passed);
}
