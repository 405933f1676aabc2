use inertial_km::iteration::{step, summability_diagnostics, IterationState};
use inertial_km::operators::{AffineContraction, ConstantFamily, Rotation2d};
use inertial_km::schedules::{
    check_feasibility, classify_perturbations, lambda_bound, Direction, PerturbationSchedule,
    Stream,
};
use inertial_km::{run, OperatorFamily, ParameterSchedule, Point, StopReason};

fn pt(v: &[f64]) -> Point {
    Point::from_column_slice(v)
}

fn absorption_case<F: OperatorFamily>(
    family: &F,
    schedule: &ParameterSchedule,
    perts: &PerturbationSchedule,
    x0: Point,
) {
    let dim = x0.len();
    let folded = perts.absorb_theta(schedule);
    let theta = |k: usize| {
        perts
            .theta
            .at(k, dim)
            .unwrap()
            .unwrap_or_else(|| Point::zeros(dim))
    };
    let mut orig = IterationState::new(x0.clone());
    let mut tilde = IterationState::new(x0);
    for k in 1..=100 {
        let p = schedule.at(k);
        orig = step(&orig, family, &p, &perts.at(k, dim).unwrap()).unwrap();
        tilde = step(&tilde, family, &p, &folded.at(k, dim).unwrap()).unwrap();
        // orig now holds x_{k+1}; the shifted iterate is x_{k+1} − θ_k
        let shifted = &orig.x_curr - theta(k);
        assert!((&tilde.x_curr - &shifted).norm() <= 1e-9, "k = {k}");
        assert!((&tilde.y - &orig.y).norm() <= 1e-9, "y at k = {k}");
        assert!((&tilde.z - &orig.z).norm() <= 1e-9, "z at k = {k}");
    }
}

#[test]
fn theta_absorption_equivalence() {
    let perts = PerturbationSchedule {
        eps: Stream::power(0.2, 2.0),
        rho: Stream::Power {
            scale: 0.1,
            power: 1.5,
            direction: Direction::Vector(pt(&[1.0, -2.0])),
        },
        theta: Stream::Power {
            scale: 0.3,
            power: 1.2,
            direction: Direction::Vector(pt(&[0.5, 1.0])),
        },
    };
    let rot = Rotation2d::new(2.0).unwrap();
    absorption_case(
        &rot,
        &ParameterSchedule::ramped(0.3, 0.6, 0.4),
        &perts,
        pt(&[1.0, 2.0]),
    );
    let con = AffineContraction::new(pt(&[3.0, -1.0]), 0.7).unwrap();
    absorption_case(
        &con,
        &ParameterSchedule::constant(0.2, 0.1, 0.6),
        &perts,
        pt(&[0.0, 0.0]),
    );
    let only_theta = PerturbationSchedule {
        theta: Stream::power(1.0, 2.0),
        ..Default::default()
    };
    absorption_case(
        &rot,
        &ParameterSchedule::constant(0.5, 0.0, 0.2),
        &only_theta,
        pt(&[-1.0, 1.0]),
    );
}

#[test]
fn distance_to_fixed_point_settles() {
    let cases = [(0.3, 0.3), (0.5, 0.0), (0.0, 0.8), (0.2, 0.6)];
    for (phi, (a, b)) in [0.4, 1.5, 3.0, 2.2].into_iter().zip(cases) {
        let lambda = 0.9 * lambda_bound(a, b).unwrap();
        let schedule = ParameterSchedule::constant(a, b, lambda);
        assert!(check_feasibility(&schedule, 10).unwrap().feasible_weak);
        let rep = run(
            &Rotation2d::new(phi).unwrap(),
            &schedule,
            &PerturbationSchedule::none(),
            pt(&[1.0, -0.5]),
            1e-300,
            10_000,
        )
        .unwrap();
        let d = rep.dist_trace.unwrap();
        let half = &d[d.len() / 2..];
        let rises: f64 = half.windows(2).map(|w| (w[1] - w[0]).max(0.0)).sum();
        assert!(rises < 1e-6, "phi {phi}: positive increments {rises}");
    }
}

#[test]
fn feasible_rotation_has_vanishing_scaled_residual() {
    let rep = run(
        &Rotation2d::new(1.0).unwrap(),
        &ParameterSchedule::constant(0.3, 0.3, 0.5),
        &PerturbationSchedule::none(),
        pt(&[1.0, 0.0]),
        1e-300,
        2000,
    )
    .unwrap();
    let d = summability_diagnostics(&rep);
    let s = &d.scaled_min_km_sq;
    assert!(s.last().unwrap() < &1e-20);
    // eventually decreasing
    let tail = &s[s.len() / 10..];
    assert!(tail
        .windows(2)
        .all(|w| w[1] <= w[0] * (1.0 + 1e-12) || w[1] < 1e-280));
    assert!(d.last_quarter_share < 1e-6);
}

#[test]
fn perturbed_contraction_converges_and_budget_matches_basel() {
    let p = pt(&[1.0, 2.0, -1.0]);
    let fam = AffineContraction::new(p.clone(), 0.5).unwrap();
    let perts = PerturbationSchedule {
        eps: Stream::power(1.0, 2.0),
        ..Default::default()
    };
    let rep = run(
        &fam,
        &ParameterSchedule::constant(0.2, 0.2, 0.5),
        &perts,
        pt(&[0.0, 0.0, 0.0]),
        1e-300,
        10_000,
    )
    .unwrap();
    assert!(rep.perturbed);
    assert!(rep.dist_trace.unwrap().last().unwrap() < &1e-4);
    let s = classify_perturbations(&perts, 10_000, 3).unwrap();
    let basel = std::f64::consts::PI.powi(2) / 6.0;
    assert!((s.eps.l1() - basel).abs() <= 0.01 * basel);
    assert!(!s.eps.l1_flagged);
    assert_eq!(s.rho.l1(), 0.0);
}

#[test]
fn harmonic_perturbation_is_flagged() {
    let perts = PerturbationSchedule::parse("eps=1/k").unwrap();
    let s = classify_perturbations(&perts, 4000, 2).unwrap();
    assert!(s.eps.l1_flagged);
    assert!(!s.eps.l2_flagged);
}

#[test]
fn moving_fixed_points_are_tracked() {
    let target = pt(&[2.0, -1.0]);
    let e = pt(&[1.0, 1.0]);
    let t = target.clone();
    let fam = ConstantFamily::from_fn(2, move |k| &t + &e / (k * k) as f64, Some(target.clone()));
    let lambda = 0.9 * lambda_bound(0.4, 0.4).unwrap();
    let rep = run(
        &fam,
        &ParameterSchedule::constant(0.4, 0.4, lambda),
        &PerturbationSchedule::none(),
        pt(&[0.0, 0.0]),
        1e-300,
        10_000,
    )
    .unwrap();
    assert!((&rep.final_point - &target).norm() < 1e-5);
}

#[test]
fn rerun_is_bitwise_identical() {
    let go = || {
        run(
            &Rotation2d::new(0.7).unwrap(),
            &ParameterSchedule::ramped(0.4, 0.2, 0.6),
            &PerturbationSchedule::parse("eps=0.5/k^2, theta=1/k^1.5").unwrap(),
            pt(&[1.0, 1.0]),
            1e-9,
            500,
        )
        .unwrap()
    };
    let (a, b) = (go(), go());
    assert_eq!(a, b);
    assert!(matches!(
        a.stop_reason,
        StopReason::Tolerance | StopReason::MaxIter
    ));
}
