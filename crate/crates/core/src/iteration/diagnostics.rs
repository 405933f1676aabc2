use super::RunReport;
use crate::error::{Error, Result};
use crate::schedules::ParameterSchedule;

/// Outcome of checking `‖x_k − p*‖² ≤ Q^k ‖x_1 − p*‖² / ((1−Λ)(1−A))`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearRateCheck {
    pub passed: bool,
    /// `min_k (bound_k − ‖x_k − p*‖²)`; negative when the bound is violated.
    pub worst_slack: f64,
    /// `Q = sup_k (1 − λ_k + λ_k q_k²)`.
    pub rate: f64,
    /// `1 / ((1−Λ)(1−A))`.
    pub constant: f64,
}

/// Checks the linear-rate bound of an unperturbed run at every recorded row.
pub fn verify_linear_rate(
    report: &RunReport,
    schedule: &ParameterSchedule,
) -> Result<LinearRateCheck> {
    if report.perturbed {
        return Err(Error::Contract(
            "linear rate bound applies to unperturbed runs only".into(),
        ));
    }
    let dist = report
        .dist_trace
        .as_ref()
        .ok_or_else(|| Error::Contract("run has no distance trace".into()))?;
    if schedule.q.is_none() {
        return Err(Error::config(
            "linear rate check needs contraction moduli q_k",
        ));
    }
    let last = report.indices.last().copied().unwrap_or(1);
    let mut ks: Vec<_> = (1..=last).map(|k| schedule.at(k)).collect();
    ks.extend(schedule.limit());
    let rate = ks
        .iter()
        .map(|p| 1.0 - p.lambda + p.lambda * p.q * p.q)
        .fold(f64::NEG_INFINITY, f64::max);
    let sup_lambda = ks
        .iter()
        .map(|p| p.lambda)
        .fold(f64::NEG_INFINITY, f64::max);
    let sup_alpha = ks.iter().map(|p| p.alpha).fold(f64::NEG_INFINITY, f64::max);
    let constant = 1.0 / ((1.0 - sup_lambda) * (1.0 - sup_alpha));

    let d1 = match dist.first() {
        Some(d) => d * d,
        None => {
            return Ok(LinearRateCheck {
                passed: true,
                worst_slack: f64::INFINITY,
                rate,
                constant,
            })
        }
    };
    let mut worst = f64::INFINITY;
    let mut passed = true;
    for (&k, d) in report.indices.iter().zip(dist) {
        let bound = rate.powi(k as i32) * d1 * constant;
        let actual = d * d;
        worst = worst.min(bound - actual);
        // one ulp-scale allowance for the rounding in `actual`
        if actual > bound * (1.0 + 1e-12) {
            passed = false;
        }
    }
    Ok(LinearRateCheck {
        passed,
        worst_slack: worst,
        rate,
        constant,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummabilityDiagnostics {
    /// `Σ_k ‖x_k − x_{k−1}‖²` over the run.
    pub total_step_sq: f64,
    /// Share of the total contributed by the last quarter of the rows.
    pub last_quarter_share: f64,
    /// `k · min_{j≤k} ‖T_j z_j − y_j‖²` per row.
    pub scaled_min_km_sq: Vec<f64>,
}

pub fn summability_diagnostics(report: &RunReport) -> SummabilityDiagnostics {
    let sums = &report.step_sq_partial_sums;
    let total = sums.last().copied().unwrap_or(0.0);
    let n = sums.len();
    let last_quarter_share = if total == 0.0 || n == 0 {
        0.0
    } else {
        let cut = n - (n / 4).max(1);
        let before = if cut == 0 { 0.0 } else { sums[cut - 1] };
        (total - before) / total
    };
    let mut best = f64::INFINITY;
    let scaled_min_km_sq = report
        .indices
        .iter()
        .zip(&report.km_residual_trace)
        .map(|(&k, r)| {
            best = best.min(r * r);
            k as f64 * best
        })
        .collect();
    SummabilityDiagnostics {
        total_step_sq: total,
        last_quarter_share,
        scaled_min_km_sq,
    }
}
