//! Parameter and perturbation schedules and their admissibility.

mod feasibility;
mod perturbation;
mod sequence;

pub use feasibility::{
    check_feasibility, constant_case_margin, lambda_bound, lambda_bound_uncapped, strong_margin,
    weak_margin, FeasibilityVerdict, MarginLocation,
};
pub use perturbation::{
    classify_perturbations, Direction, PerturbationSchedule, PerturbationSummary, Perturbations,
    Stream, StreamBudget,
};
pub use sequence::{ParameterSchedule, Params, Sequence};

use crate::error::{Error, Result};

/// `ν = 1/λ − 1`.
pub fn nu(lambda: f64) -> Result<f64> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::domain(format!(
            "lambda = {lambda} must lie in (0,1)"
        )));
    }
    Ok(1.0 / lambda - 1.0)
}

/// `μ = (1−λ)α + λβ`, the effective inertia of one step.
pub fn mu(alpha: f64, beta: f64, lambda: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::domain(format!("alpha = {alpha} must lie in [0,1)")));
    }
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::domain(format!("beta = {beta} must lie in [0,1]")));
    }
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::domain(format!(
            "lambda = {lambda} must lie in [0,1]"
        )));
    }
    Ok((1.0 - lambda) * alpha + lambda * beta)
}
