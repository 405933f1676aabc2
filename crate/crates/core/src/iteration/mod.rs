//! The inertial relaxed update and its run loop.

mod diagnostics;
mod report;

pub use diagnostics::{
    summability_diagnostics, verify_linear_rate, LinearRateCheck, SummabilityDiagnostics,
};
pub use report::{fmt_num, RunReport, StopReason};

use crate::error::{Error, Result};
use crate::operators::OperatorFamily;
use crate::schedules::{ParameterSchedule, Params, PerturbationSchedule, Perturbations};
use crate::Point;

/// Coordinates beyond this magnitude abort a run as divergent.
pub const DIVERGENCE_LIMIT: f64 = 1e150;

/// Rows past this index are kept only every `DECIMATION`-th step.
pub const DENSE_TRACE_LIMIT: usize = 1_000_000;
pub const DECIMATION: usize = 10;

/// Iterates around index `k`: `x_{k−1}`, `x_k` and the extrapolated points
/// `y`, `z` of the step that produced `x_k` (both equal to `x_1` initially).
#[derive(Debug, Clone, PartialEq)]
pub struct IterationState {
    pub k: usize,
    pub x_prev: Point,
    pub x_curr: Point,
    pub y: Point,
    pub z: Point,
}

impl IterationState {
    /// State at `k = 1` with `x_0 = x_1 = x0`.
    pub fn new(x0: Point) -> Self {
        Self {
            k: 1,
            x_prev: x0.clone(),
            y: x0.clone(),
            z: x0.clone(),
            x_curr: x0,
        }
    }
}

fn check_params(p: &Params, k: usize) -> Result<()> {
    for (name, v) in [("alpha", p.alpha), ("beta", p.beta), ("lambda", p.lambda)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::domain(format!("{name}_{k} = {v} outside [0,1]")));
        }
    }
    Ok(())
}

fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

/// One step; also returns `T_k z_k`.
fn advance<F: OperatorFamily + ?Sized>(
    state: &IterationState,
    family: &F,
    params: &Params,
    perts: &Perturbations,
) -> Result<(IterationState, Point)> {
    check_params(params, state.k)?;
    let dim = state.x_curr.len();
    check_dim(dim, state.x_prev.len())?;
    if let Some(d) = family.dim() {
        check_dim(d, dim)?;
    }
    let diff = &state.x_curr - &state.x_prev;
    let mut y = &state.x_curr + &diff * params.alpha;
    let mut z = &state.x_curr + &diff * params.beta;
    for (target, pert) in [(&mut y, &perts.eps), (&mut z, &perts.rho)] {
        if let Some(e) = pert {
            check_dim(dim, e.len())?;
            *target += e;
        }
    }
    let tz = family.apply(state.k, &z);
    check_dim(dim, tz.len())?;
    let mut next = &y * (1.0 - params.lambda) + &tz * params.lambda;
    if let Some(t) = &perts.theta {
        check_dim(dim, t.len())?;
        next += t;
    }
    Ok((
        IterationState {
            k: state.k + 1,
            x_prev: state.x_curr.clone(),
            x_curr: next,
            y,
            z,
        },
        tz,
    ))
}

/// Applies the update at index `state.k`:
/// `y = x + α(x − x_prev) + ε`, `z = x + β(x − x_prev) + ρ`,
/// `x_next = (1−λ) y + λ T_k z + θ`.
pub fn step<F: OperatorFamily + ?Sized>(
    state: &IterationState,
    family: &F,
    params: &Params,
    perts: &Perturbations,
) -> Result<IterationState> {
    advance(state, family, params, perts).map(|(s, _)| s)
}

/// `‖T_k x − x‖`.
pub fn residual<F: OperatorFamily + ?Sized>(family: &F, k: usize, x: &Point) -> f64 {
    (family.apply(k, x) - x).norm()
}

fn is_runaway(x: &Point) -> bool {
    x.iter()
        .any(|v| !v.is_finite() || v.abs() > DIVERGENCE_LIMIT)
}

/// Iterates from `x_0 = x_1 = x0` until `‖T_k x_k − x_k‖ ≤ tolerance` or
/// `k = max_iter`.
///
/// Row `k` of the report describes `x_k`: its residual, the step `x_k − x_{k−1}`,
/// the distance to the family's target (when known) and `‖T_k z_k − y_k‖` of the
/// step taken from `x_k`.
pub fn run<F: OperatorFamily + ?Sized>(
    family: &F,
    schedule: &ParameterSchedule,
    perts: &PerturbationSchedule,
    x0: Point,
    tolerance: f64,
    max_iter: usize,
) -> Result<RunReport> {
    if !(tolerance > 0.0) {
        return Err(Error::domain(format!(
            "tolerance {tolerance} must be positive"
        )));
    }
    if max_iter == 0 {
        return Err(Error::domain("max_iter must be at least 1"));
    }
    let dim = x0.len();
    if let Some(d) = family.dim() {
        check_dim(d, dim)?;
    }
    if is_runaway(&x0) {
        return Err(Error::domain("initial point is not finite"));
    }
    let target = family.target();
    if let Some(t) = &target {
        check_dim(dim, t.len())?;
    }

    let mut report = RunReport::new(target.is_some(), !perts.is_zero());
    let mut state = IterationState::new(x0);
    let mut sum_sq = 0.0;

    for k in 1..=max_iter {
        let r = residual(family, k, &state.x_curr);
        let step_norm = (&state.x_curr - &state.x_prev).norm();
        sum_sq += step_norm * step_norm;
        let dist = target.as_ref().map(|p| (&state.x_curr - p).norm());

        let (next, tz) = advance(&state, family, &schedule.at(k), &perts.at(k, dim)?)?;
        let km = (&tz - &next.y).norm();

        let converged = r <= tolerance;
        let last = converged || k == max_iter;
        if k <= DENSE_TRACE_LIMIT || k % DECIMATION == 0 || last {
            report.push(k, r, km, step_norm, sum_sq, dist);
        }
        report.iterations = k;

        if last {
            report.stop_reason = if converged {
                StopReason::Tolerance
            } else {
                StopReason::MaxIter
            };
            report.final_point = state.x_curr;
            return Ok(report);
        }
        if is_runaway(&next.x_curr) || !r.is_finite() {
            report.stop_reason = StopReason::Diverged;
            report.final_point = state.x_curr;
            return Err(Error::Diverged {
                last_finite_k: k,
                report: Box::new(report),
            });
        }
        state = next;
    }
    unreachable!("loop returns at k = max_iter")
}
