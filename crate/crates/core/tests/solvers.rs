use std::sync::Arc;

use npsg::data::{a9a_surrogate, Dataset, Sample};
use npsg::oracle::trial_rng;
use npsg::prelude::*;
use npsg::problems::make_max_affine;
use npsg::solvers::{
    composite_plain_step, nesterov_psg_step, nesterov_psg_strong_step, psg_step, srsg_step,
    srsg_strong_step, Draw, SolverState,
};
use npsg::solvers::{run_solver_observed, Weight};
use npsg::verify::{
    run_monitored, stochastic_cross_term_check, AverageIdentityMonitor, FeasibilityMonitor,
    Monitor, ZIdentityMonitor,
};

fn deterministic(budget: usize, w0: Vector) -> RunOptions {
    RunOptions {
        budget,
        sampling: Sampling::Deterministic,
        w0: Some(w0),
        ..RunOptions::default()
    }
}

#[test]
fn psg_equals_composite_step_with_zero_regularizer() {
    let p = make_max_affine(6, 5, 0.0, 2).unwrap();
    let set = FeasibleSet::ball(3.0).unwrap();
    let mut a = SolverState::new(Vector::from_elem(6, 1.0));
    let mut b = a.clone();
    let mut rng = trial_rng(0);
    for t in 1..=200 {
        let step = 0.5 / (t as f64).sqrt();
        psg_step(&mut a, &p, step, &set).unwrap();
        let mut draw = Draw {
            sampling: Sampling::Deterministic,
            rng: &mut rng,
        };
        composite_plain_step(&mut b, &p, &Regularizer::Zero, step, &set, &mut draw).unwrap();
        assert_eq!(a.w, b.w);
    }
}

#[test]
fn zero_regularizer_srsg_is_nesterov_psg() {
    let p = make_max_affine(6, 5, 0.0, 2).unwrap();
    let set = FeasibleSet::WholeSpace;
    let sched = StepSchedule::GeneralConvex;
    let mut a = SolverState::new(Vector::from_elem(6, 1.0));
    let mut b = a.clone();
    let (mut ra, mut rb) = (trial_rng(1), trial_rng(1));
    for _ in 0..500 {
        nesterov_psg_step(
            &mut a,
            &p,
            &sched,
            &set,
            &mut Draw {
                sampling: Sampling::Deterministic,
                rng: &mut ra,
            },
        )
        .unwrap();
        srsg_step(
            &mut b,
            &p,
            &Regularizer::Zero,
            &sched,
            &set,
            &mut Draw {
                sampling: Sampling::Deterministic,
                rng: &mut rb,
            },
        )
        .unwrap();
        assert_eq!(a.w, b.w);
    }
}

#[test]
fn zero_regularizer_strong_srsg_matches_strong_nesterov() {
    let p = make_max_affine(6, 5, 1.0, 2).unwrap();
    for set in [FeasibleSet::WholeSpace, FeasibleSet::ball(0.5).unwrap()] {
        let sched = StepSchedule::StronglyConvex { mu: 1.0 };
        let mut a = SolverState::new(Vector::from_elem(6, 0.1));
        let mut b = a.clone();
        let (mut ra, mut rb) = (trial_rng(1), trial_rng(1));
        for _ in 0..500 {
            nesterov_psg_strong_step(
                &mut a,
                &p,
                &sched,
                &set,
                1.0,
                &mut Draw {
                    sampling: Sampling::Deterministic,
                    rng: &mut ra,
                },
            )
            .unwrap();
            srsg_strong_step(
                &mut b,
                &p,
                &Regularizer::Zero,
                &sched,
                &set,
                1.0,
                &mut Draw {
                    sampling: Sampling::Deterministic,
                    rng: &mut rb,
                },
            )
            .unwrap();
            let diff = (&a.w - &b.w).iter().fold(0.0f64, |m, x| m.max(x.abs()));
            assert!(diff <= 1e-12 * (1.0 + a.w.iter().fold(0.0f64, |m, x| m.max(x.abs()))));
        }
    }
}

#[test]
fn single_sample_stochastic_run_is_deterministic_run() {
    let row = Sample {
        x: SparseVector::new(vec![0, 2], vec![1.0, -0.5]).unwrap(),
        y: 1.0,
    };
    let data = Arc::new(Dataset::new(vec![row], 3).unwrap());
    let problem = Composite::hinge(
        HingeProblem::new(data, 0.1, HingeMode::L1).unwrap(),
        FeasibleSet::WholeSpace,
    )
    .unwrap();
    for kind in [
        SolverKind::Srsg,
        SolverKind::Comid,
        SolverKind::PaPsgRegularized,
    ] {
        let solver = SolverConfig::new(kind);
        let det =
            npsg::solvers::run_solver(&solver, &problem, &deterministic(300, Vector::zeros(3)))
                .unwrap();
        let sto = npsg::solvers::run_solver(
            &solver,
            &problem,
            &RunOptions {
                sampling: Sampling::Stochastic,
                seed: 77,
                ..deterministic(300, Vector::zeros(3))
            },
        )
        .unwrap();
        assert_eq!(det, sto, "{kind:?}");
    }
}

#[test]
fn runs_are_reproducible_and_seed_dependent() {
    let data = Arc::new(a9a_surrogate(200, 1).unwrap());
    let problem = Composite::hinge(
        HingeProblem::new(data, 0.02, HingeMode::L1).unwrap(),
        FeasibleSet::WholeSpace,
    )
    .unwrap();
    let run = |seed| {
        npsg::solvers::run_solver(
            &SolverConfig::new(SolverKind::Srsg),
            &problem,
            &RunOptions {
                budget: 500,
                seed,
                ..RunOptions::default()
            },
        )
        .unwrap()
    };
    assert_eq!(run(3), run(3));
    assert_ne!(run(3), run(4));
}

#[test]
fn averaging_identities_hold() {
    let p = make_max_affine(8, 6, 0.0, 5).unwrap();
    let problem = Composite::max_affine(p, FeasibleSet::ball(4.0).unwrap()).unwrap();
    let strong = Composite::max_affine(
        make_max_affine(8, 6, 1.0, 5).unwrap(),
        FeasibleSet::ball(4.0).unwrap(),
    )
    .unwrap();
    let mut linear = SolverConfig::new(SolverKind::PaPsg);
    linear.weights = Some(Weight::Linear { c: 0.5 });
    for (solver, problem) in [
        (SolverConfig::new(SolverKind::QuasiMonotoneDa), &problem),
        (SolverConfig::new(SolverKind::PaPsg), &problem),
        (linear, &problem),
        (SolverConfig::new(SolverKind::PaPsgStrong), &strong),
    ] {
        let mons: Vec<Box<dyn Monitor>> = vec![
            Box::new(AverageIdentityMonitor::new(1e-9)),
            Box::new(FeasibilityMonitor::new(1e-9)),
        ];
        for rep in run_monitored(
            &solver,
            problem,
            &deterministic(2000, Vector::from_elem(8, 1.0)),
            mons,
        )
        .unwrap()
        {
            assert!(
                rep.passed && rep.checks == 2000,
                "{:?}: {rep:?}",
                solver.kind
            );
        }
    }
}

#[test]
fn extrapolated_solvers_keep_z_identity_and_feasibility() {
    let general = Composite::max_affine(
        make_max_affine(8, 6, 0.0, 5).unwrap(),
        FeasibleSet::ball(2.0).unwrap(),
    )
    .unwrap();
    let strong = Composite::max_affine(
        make_max_affine(8, 6, 1.0, 5).unwrap(),
        FeasibleSet::ball(2.0).unwrap(),
    )
    .unwrap();
    for (kind, problem) in [
        (SolverKind::NesterovPsg, &general),
        (SolverKind::Srsg, &general),
        (SolverKind::NesterovPsgStrong, &strong),
        (SolverKind::SrsgStrong, &strong),
    ] {
        let mons: Vec<Box<dyn Monitor>> = vec![
            Box::new(ZIdentityMonitor::new(1e-9)),
            Box::new(FeasibilityMonitor::new(1e-9)),
        ];
        let w0 = Vector::from_elem(8, 0.5);
        for rep in run_monitored(
            &SolverConfig::new(kind),
            problem,
            &deterministic(5000, w0),
            mons,
        )
        .unwrap()
        {
            assert!(rep.passed, "{kind:?}: {rep:?}");
        }
    }
}

#[test]
fn stochastic_noise_term_has_zero_mean() {
    let data = Arc::new(a9a_surrogate(300, 2).unwrap());
    let problem = Composite::hinge(
        HingeProblem::new(data, 0.0, HingeMode::L1).unwrap(),
        FeasibleSet::WholeSpace,
    )
    .unwrap();
    let wstar = Vector::zeros(problem.dim());
    let run = RunOptions {
        budget: 300,
        ..RunOptions::default()
    };
    let rep = stochastic_cross_term_check(
        &SolverConfig::new(SolverKind::NesterovPsg),
        &problem,
        &run,
        &wstar,
        40,
    )
    .unwrap();
    assert!(rep.passed, "{rep:?}");
}

#[test]
fn every_solver_runs_on_a_suitable_problem() {
    let data = Arc::new(a9a_surrogate(200, 3).unwrap());
    let l1 = Composite::hinge(
        HingeProblem::new(data.clone(), 0.02, HingeMode::L1).unwrap(),
        FeasibleSet::WholeSpace,
    )
    .unwrap();
    let svm = Composite::hinge(
        HingeProblem::new(data, 0.01, HingeMode::L2Svm).unwrap(),
        FeasibleSet::pegasos(0.01).unwrap(),
    )
    .unwrap();
    let plain = Composite::max_affine(
        make_max_affine(5, 4, 0.0, 1).unwrap(),
        FeasibleSet::WholeSpace,
    )
    .unwrap();
    let quad = Composite::quadratic(Quadratic::isotropic(3, 2.0).unwrap());
    for kind in SolverKind::ALL {
        let (problem, solver) = match kind {
            SolverKind::SmoothAccelerated => (&quad, SolverConfig::new(kind).with_smoothness(2.0)),
            k if k.needs_mu() || k == SolverKind::Pegasos => (&svm, SolverConfig::new(kind)),
            k if k.handles_regularizer() => (&l1, SolverConfig::new(kind)),
            _ => (&plain, SolverConfig::new(kind)),
        };
        let w0 = Vector::zeros(problem.dim());
        let out = run_solver_observed(
            &solver,
            problem,
            &RunOptions {
                budget: 200,
                w0: Some(w0),
                ..RunOptions::default()
            },
            &mut (),
        )
        .unwrap_or_else(|e| panic!("{kind:?}: {e}"));
        let first = out.trace.rows()[0].f_individual;
        assert!(out.trace.last().unwrap().f_individual.is_finite());
        assert_eq!(out.trace.last().unwrap().t, 200, "{kind:?}");
        assert!(first.is_finite());
    }
}

#[test]
fn solver_rejects_regularizer_it_cannot_handle() {
    let data = Arc::new(a9a_surrogate(50, 3).unwrap());
    let l1 = Composite::hinge(
        HingeProblem::new(data, 0.02, HingeMode::L1).unwrap(),
        FeasibleSet::WholeSpace,
    )
    .unwrap();
    assert!(SolverConfig::new(SolverKind::NesterovPsg)
        .resolve(&l1)
        .is_err());
    assert!(SolverConfig::new(SolverKind::Srsg).resolve(&l1).is_ok());
}
