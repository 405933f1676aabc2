use super::sequence::{ParameterSchedule, Params};
use crate::error::{Error, Result};

/// Below this separation between `α` and `β` the general closed form of the
/// relaxation bound is replaced by its Nesterov (`α = β`) limit.
const BRANCH_TOL: f64 = 1e-9;

/// Where the supremum of a margin was attained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MarginLocation {
    Index(usize),
    Limit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityVerdict {
    pub hypothesis_ok: bool,
    /// Human-readable description of each violated standing assumption.
    pub violations: Vec<String>,
    pub weak_margin_sup: f64,
    pub weak_margin_at: MarginLocation,
    pub strong_margin_sup: Option<f64>,
    pub feasible_weak: bool,
    pub feasible_strong: Option<bool>,
    /// True when some sequence is a raw prefix, so the suprema only cover `k ≤ horizon`.
    pub horizon_limited: bool,
}

fn bracket(cur: &Params, prev: &Params, strong: bool) -> f64 {
    let (a, b, l, q) = (cur.alpha, cur.beta, cur.lambda, cur.q);
    let q2 = if strong { q * q } else { 1.0 };
    let big_q = if strong { 1.0 - l + l * q * q } else { 1.0 };
    (1.0 - l) * a * (1.0 + a) + l * q2 * b * (1.0 + b) + cur.nu() * a * (1.0 - a)
        - big_q * prev.nu() * (1.0 - prev.alpha)
}

fn check_index(k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::domain("margins are indexed from k = 1"));
    }
    Ok(())
}

/// The bracket whose supremum must be negative for weak convergence, at index `k`.
/// At `k = 1` the previous-index terms use `ν_0 = ν_1`, `α_0 = α_1`.
pub fn weak_margin(schedule: &ParameterSchedule, k: usize) -> Result<f64> {
    check_index(k)?;
    Ok(bracket(&schedule.at(k), &schedule.at(k - 1), false))
}

/// Strong-convergence counterpart of [`weak_margin`], weighted by the contraction moduli.
pub fn strong_margin(schedule: &ParameterSchedule, k: usize) -> Result<f64> {
    check_index(k)?;
    if schedule.q.is_none() {
        return Err(Error::config("strong margin needs contraction moduli q_k"));
    }
    Ok(bracket(&schedule.at(k), &schedule.at(k - 1), true))
}

/// `(β−α)(1+α+β)λ² + (1−α+2α²)λ − (1−α)²`: the constant-parameter margin
/// multiplied by `λ`. Negative iff constant `(α, β, λ)` is admissible.
pub fn constant_case_margin(alpha: f64, beta: f64, lambda: f64) -> f64 {
    (beta - alpha) * (1.0 + alpha + beta) * lambda * lambda
        + (1.0 - alpha + 2.0 * alpha * alpha) * lambda
        - (1.0 - alpha) * (1.0 - alpha)
}

/// Positive root of [`constant_case_margin`] in `λ`, without the cap at 1.
pub fn lambda_bound_uncapped(alpha: f64, beta: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::domain(format!("alpha = {alpha} must lie in [0,1)")));
    }
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::domain(format!("beta = {beta} must lie in [0,1]")));
    }
    let c = (1.0 - alpha) * (1.0 - alpha);
    let b = 1.0 - alpha + 2.0 * alpha * alpha;
    if alpha == 0.0 {
        return Ok(1.0 / (1.0 + beta));
    }
    if beta == 0.0 {
        // λ = 1 is always a root here; the other is (1−α)²/(α(1+α))
        return Ok(if alpha >= 1.0 / 3.0 {
            c / (alpha * (1.0 + alpha))
        } else {
            1.0
        });
    }
    if (beta - alpha).abs() < BRANCH_TOL {
        return Ok(c / b);
    }
    // Root of a λ² + b λ − c with a = (β−α)(1+α+β), written as
    // 2c / (b + √(b² + 4ac)); the textbook form divides by a and cancels badly near β = α.
    let disc = (1.0 - 3.0 * alpha).powi(2) + 4.0 * beta * (1.0 + beta) * c;
    Ok(2.0 * c / (b + disc.sqrt()))
}

/// Largest admissible constant relaxation for constant inertia `(α, β)`, capped at 1.
pub fn lambda_bound(alpha: f64, beta: f64) -> Result<f64> {
    Ok(lambda_bound_uncapped(alpha, beta)?.min(1.0))
}

fn sup_over<F: Fn(&Params) -> f64>(schedule: &ParameterSchedule, horizon: usize, f: F) -> f64 {
    let mut s = (1..=horizon)
        .map(|k| f(&schedule.at(k)))
        .fold(f64::NEG_INFINITY, f64::max);
    if let Some(lim) = schedule.limit() {
        s = s.max(f(&lim));
    }
    s
}

fn inf_over<F: Fn(&Params) -> f64>(schedule: &ParameterSchedule, horizon: usize, f: F) -> f64 {
    -sup_over(schedule, horizon, |p| -f(p))
}

/// Checks the standing assumptions and evaluates the margin suprema over
/// `k = 1..=horizon`, plus the limit term for closed-form schedules.
pub fn check_feasibility(
    schedule: &ParameterSchedule,
    horizon: usize,
) -> Result<FeasibilityVerdict> {
    if horizon == 0 {
        return Err(Error::domain("horizon must be at least 1"));
    }
    let mut violations = Vec::new();

    for k in 1..=horizon {
        let p = schedule.at(k);
        if !(0.0..1.0).contains(&p.alpha) {
            violations.push(format!("alpha_{k} = {} outside [0,1)", p.alpha));
        }
        if !(0.0..=1.0).contains(&p.beta) {
            violations.push(format!("beta_{k} = {} outside [0,1]", p.beta));
        }
        if !(p.lambda > 0.0 && p.lambda < 1.0) {
            violations.push(format!("lambda_{k} = {} outside (0,1)", p.lambda));
        }
        if !(p.q > 0.0 && p.q <= 1.0) {
            violations.push(format!("q_{k} = {} outside (0,1]", p.q));
        }
        if k < horizon {
            let next = schedule.at(k + 1);
            if next.mu() < p.mu() {
                violations.push(format!("mu decreases between k = {k} and k = {}", k + 1));
            }
        }
        if violations.len() > 16 {
            violations.push("further violations omitted".into());
            break;
        }
    }

    let sup_alpha = sup_over(schedule, horizon, |p| p.alpha);
    let sup_lambda = sup_over(schedule, horizon, |p| p.lambda);
    let inf_lambda = inf_over(schedule, horizon, |p| p.lambda);
    let sup_mu = sup_over(schedule, horizon, Params::mu);
    if sup_alpha >= 1.0 {
        violations.push(format!("sup alpha = {sup_alpha} is not below 1"));
    }
    if sup_lambda >= 1.0 {
        violations.push(format!("sup lambda = {sup_lambda} is not below 1"));
    }
    if inf_lambda <= 0.0 {
        violations.push(format!("inf lambda = {inf_lambda} is not positive"));
    }
    if sup_mu >= 1.0 {
        violations.push(format!("sup mu = {sup_mu} is not below 1"));
    }
    if let Some(lim) = schedule.limit() {
        if lim.mu() < schedule.at(horizon).mu() {
            violations.push("mu exceeds its limit at the end of the horizon".into());
        }
    }

    let mut weak_sup = f64::NEG_INFINITY;
    let mut weak_at = MarginLocation::Index(1);
    let mut strong_sup = f64::NEG_INFINITY;
    for k in 1..=horizon {
        let (cur, prev) = (schedule.at(k), schedule.at(k - 1));
        let w = bracket(&cur, &prev, false);
        if w > weak_sup {
            weak_sup = w;
            weak_at = MarginLocation::Index(k);
        }
        strong_sup = strong_sup.max(bracket(&cur, &prev, true));
    }
    if let Some(lim) = schedule.limit() {
        let w = bracket(&lim, &lim, false);
        if w > weak_sup {
            weak_sup = w;
            weak_at = MarginLocation::Limit;
        }
        strong_sup = strong_sup.max(bracket(&lim, &lim, true));
    }

    let hypothesis_ok = violations.is_empty();
    let (strong_margin_sup, feasible_strong) = if schedule.q.is_some() {
        let sup_q = sup_over(schedule, horizon, |p| p.q);
        (
            Some(strong_sup),
            Some(hypothesis_ok && sup_q < 1.0 && strong_sup < 0.0),
        )
    } else {
        (None, None)
    };

    Ok(FeasibilityVerdict {
        hypothesis_ok,
        violations,
        weak_margin_sup: weak_sup,
        weak_margin_at: weak_at,
        strong_margin_sup,
        feasible_weak: hypothesis_ok && weak_sup < 0.0,
        feasible_strong,
        horizon_limited: !schedule.is_closed_form(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedules::Sequence;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn lambda_hb(a: f64) -> f64 {
        (1.0 - a).powi(2) / (a * (1.0 + a))
    }

    fn lambda_n(a: f64) -> f64 {
        (1.0 - a).powi(2) / (1.0 - a + 2.0 * a * a)
    }

    /// Textbook root of the quadratic, as written with the (β−α) denominator.
    fn lambda_textbook(a: f64, b: f64) -> f64 {
        (((1.0 - 3.0 * a).powi(2) + 4.0 * b * (1.0 + b) * (1.0 - a).powi(2)).sqrt() - 1.0 + a
            - 2.0 * a * a)
            / (2.0 * (b - a) * (1.0 + a + b))
    }

    #[test]
    fn weak_margin_examples() {
        let s = ParameterSchedule::constant(0.0, 0.0, 0.4);
        assert_relative_eq!(
            weak_margin(&s, 3).unwrap(),
            -(1.0 / 0.4 - 1.0),
            epsilon = 1e-14
        );

        let s = ParameterSchedule::constant(0.5, 0.5, lambda_n(0.5));
        assert!(weak_margin(&s, 1).unwrap().abs() < 1e-14);

        let s = ParameterSchedule::constant(0.0, 1.0, 0.5);
        assert!(weak_margin(&s, 7).unwrap().abs() < 1e-14);

        assert!(matches!(weak_margin(&s, 0), Err(Error::Domain(_))));
    }

    #[test]
    fn strong_margin_examples() {
        let s = ParameterSchedule::constant(0.0, 0.0, 0.5).with_q(Sequence::Constant(0.5));
        assert_relative_eq!(strong_margin(&s, 1).unwrap(), -0.625, epsilon = 1e-15);

        let s = ParameterSchedule::constant(0.9, 0.9, 0.9).with_q(Sequence::Constant(1.0));
        assert!(strong_margin(&s, 2).unwrap() > 0.0);

        let s = ParameterSchedule::constant(0.1, 0.1, 0.5);
        assert!(matches!(strong_margin(&s, 1), Err(Error::Config(_))));
    }

    #[test]
    fn lambda_bound_examples() {
        assert_eq!(lambda_bound(1.0 / 3.0, 0.0).unwrap(), 1.0);
        assert_eq!(lambda_bound(0.0, 1.0).unwrap(), 0.5);
        assert_relative_eq!(lambda_bound(0.5, 0.5).unwrap(), 0.25, epsilon = 1e-15);
        assert!(lambda_bound(1.0, 0.0).is_err());
        assert!(lambda_bound(0.2, 1.5).is_err());
    }

    #[test]
    fn lambda_bound_matches_textbook_form_away_from_the_diagonal() {
        for i in 0..20 {
            for j in 0..=20 {
                let (a, b) = (i as f64 / 20.0, j as f64 / 20.0);
                if (a - b).abs() < 0.02 {
                    continue;
                }
                let expect = lambda_textbook(a, b);
                // the textbook form itself cancels when the root is small
                assert_relative_eq!(
                    lambda_bound_uncapped(a, b).unwrap(),
                    expect,
                    max_relative = 1e-9
                );
            }
        }
    }

    #[test]
    fn lambda_bound_matches_high_precision_values() {
        // 50-digit evaluations of the positive root
        let cases = [
            (0.95, 0.9, 0.0013478484523459297),
            (0.1, 0.9, 0.479_902_273_908_541_4),
            (0.6, 0.2, 0.159_137_293_018_886_5),
            (0.3, 0.05, 0.805_917_107_661_883_2),
            (0.5, 1.0, 0.2),
            (0.8, 0.0, 0.027777777777777763),
        ];
        for (a, b, expect) in cases {
            assert_relative_eq!(
                lambda_bound_uncapped(a, b).unwrap(),
                expect,
                max_relative = 1e-14
            );
        }
    }

    #[test]
    fn lambda_bound_special_branches() {
        for i in 1..50 {
            let a = i as f64 / 150.0;
            assert_eq!(lambda_bound(a, 0.0).unwrap(), 1.0, "a = {a}");
            let a = 1.0 / 3.0 + (2.0 / 3.0) * i as f64 / 50.0;
            assert_eq!(lambda_bound(a, 0.0).unwrap(), lambda_hb(a));
        }
        for i in 0..=20 {
            let b = i as f64 / 20.0;
            assert_eq!(lambda_bound(0.0, b).unwrap(), 1.0 / (1.0 + b));
        }
        assert!(1.0 - lambda_bound_uncapped(1e-9, 0.0).unwrap() < 1e-8);
    }

    #[test]
    fn lambda_bound_continuous_across_diagonal() {
        for i in 1..20 {
            let a = i as f64 / 20.0;
            let on = lambda_bound(a, a).unwrap();
            // straddle the switch between the general and the diagonal formula
            for d in [2e-9, -2e-9, 5e-10, -5e-10, 1e-8, -1e-8] {
                assert!((lambda_bound(a, a + d).unwrap() - on).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn constant_case_margin_examples() {
        assert_relative_eq!(
            constant_case_margin(0.0, 0.0, 0.3),
            0.3 - 1.0,
            epsilon = 1e-15
        );
        assert_relative_eq!(constant_case_margin(0.5, 0.5, 0.2), -0.05, epsilon = 1e-15);
        for (a, b) in [(0.5, 0.2), (0.7, 0.9), (0.2, 0.8), (0.9, 0.0)] {
            let l = lambda_bound(a, b).unwrap();
            assert!(l < 1.0);
            assert!(constant_case_margin(a, b, l).abs() < 1e-10, "{a} {b}");
        }
    }

    #[test]
    fn constant_margin_sign_on_grid() {
        for i in 0..40 {
            for j in 0..=40 {
                let (a, b) = (i as f64 / 40.0, j as f64 / 40.0);
                let l = lambda_bound(a, b).unwrap();
                for t in [0.1, 0.5, 0.9, 0.999] {
                    let below = t * (l - 1e-9);
                    assert!(constant_case_margin(a, b, below) < 0.0, "{a} {b} {below}");
                }
                if l < 1.0 {
                    assert!(constant_case_margin(a, b, l) >= -1e-12);
                }
            }
        }
    }

    #[test]
    fn feasibility_examples() {
        let v = check_feasibility(&ParameterSchedule::constant(0.2, 0.0, 0.9), 10).unwrap();
        assert!(v.hypothesis_ok && v.feasible_weak);

        let v = check_feasibility(&ParameterSchedule::constant(0.5, 0.5, 0.3), 10).unwrap();
        assert!(v.hypothesis_ok && !v.feasible_weak);

        let s = ParameterSchedule::new(
            Sequence::Ramp(0.3),
            Sequence::Constant(0.0),
            Sequence::Constant(0.5),
        );
        let v = check_feasibility(&s, 100).unwrap();
        assert!(v.hypothesis_ok, "{:?}", v.violations);
        assert!(!v.horizon_limited);

        assert!(check_feasibility(&s, 0).is_err());
    }

    #[test]
    fn feasibility_reports_violations() {
        let s = ParameterSchedule::new(
            Sequence::Prefix(vec![0.5, 0.1]),
            Sequence::Constant(0.0),
            Sequence::Constant(0.5),
        );
        let v = check_feasibility(&s, 5).unwrap();
        assert!(!v.hypothesis_ok);
        assert!(v.violations.iter().any(|m| m.contains("mu decreases")));
        assert!(v.horizon_limited);
        assert!(!v.feasible_weak);

        let v = check_feasibility(&ParameterSchedule::constant(0.0, 0.0, 1.0), 3).unwrap();
        assert!(!v.hypothesis_ok);
    }

    #[test]
    fn limit_term_drives_ramped_supremum() {
        // Prefix margins stay negative for small k but the limit is infeasible.
        let s = ParameterSchedule::ramped(0.9, 0.9, 0.5);
        let v = check_feasibility(&s, 3).unwrap();
        assert_eq!(v.weak_margin_at, MarginLocation::Limit);
        assert!(!v.feasible_weak);
    }

    #[test]
    fn strong_feasibility_requires_q_below_one() {
        let s = ParameterSchedule::constant(0.0, 0.0, 0.5).with_q(Sequence::Constant(1.0));
        let v = check_feasibility(&s, 4).unwrap();
        assert_eq!(v.feasible_strong, Some(false));
        let s = ParameterSchedule::constant(0.0, 0.0, 0.5).with_q(Sequence::Constant(0.5));
        let v = check_feasibility(&s, 4).unwrap();
        assert_eq!(v.feasible_strong, Some(true));
        assert_relative_eq!(v.strong_margin_sup.unwrap(), -0.625, epsilon = 1e-15);
    }

    proptest! {
        #[test]
        fn strong_margin_with_unit_q_equals_weak(
            a in 0.0..0.99f64, b in 0.0..=1.0f64, l in 0.01..0.99f64, k in 1usize..50, ramp in any::<bool>()
        ) {
            let s = if ramp { ParameterSchedule::ramped(a, b, l) } else { ParameterSchedule::constant(a, b, l) }
                .with_q(Sequence::Constant(1.0));
            prop_assert_eq!(strong_margin(&s, k).unwrap(), weak_margin(&s, k).unwrap());
        }

        #[test]
        fn constant_verdict_matches_quadratic(a in 0.0..0.99f64, b in 0.0..=1.0f64, l in 0.01..0.99f64) {
            let v = check_feasibility(&ParameterSchedule::constant(a, b, l), 5).unwrap();
            prop_assert!(v.hypothesis_ok);
            let q = constant_case_margin(a, b, l);
            prop_assume!(q.abs() > 1e-12);
            prop_assert_eq!(v.feasible_weak, q < 0.0);
        }

        #[test]
        fn weak_margin_is_quadratic_over_lambda(a in 0.0..0.99f64, b in 0.0..=1.0f64, l in 0.01..0.99f64) {
            let s = ParameterSchedule::constant(a, b, l);
            let m = weak_margin(&s, 4).unwrap();
            prop_assert!((m - constant_case_margin(a, b, l) / l).abs() < 1e-10 / l);
        }
    }
}
