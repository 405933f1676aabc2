use std::io::Write;

use crate::error::Result;
use crate::Point;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Tolerance,
    MaxIter,
    Diverged,
}

impl StopReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            StopReason::Tolerance => "tolerance",
            StopReason::MaxIter => "max_iter",
            StopReason::Diverged => "diverged",
        }
    }
}

/// Per-iteration traces of a run. All trace vectors have one entry per
/// recorded row; `indices[i]` is the iteration index `k` of row `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub indices: Vec<usize>,
    /// `‖T_k x_k − x_k‖`.
    pub residual_trace: Vec<f64>,
    /// `‖T_k z_k − y_k‖`.
    pub km_residual_trace: Vec<f64>,
    /// `‖x_k − x_{k−1}‖`.
    pub step_norms: Vec<f64>,
    /// `Σ_{j≤k} ‖x_j − x_{j−1}‖²`.
    pub step_sq_partial_sums: Vec<f64>,
    /// `‖x_k − p*‖` when the family exposes a target.
    pub dist_trace: Option<Vec<f64>>,
    pub stop_reason: StopReason,
    pub iterations: usize,
    /// Whether any perturbation stream was non-zero.
    pub perturbed: bool,
    /// Last examined iterate.
    pub final_point: Point,
}

impl RunReport {
    pub(crate) fn new(with_dist: bool, perturbed: bool) -> Self {
        Self {
            indices: vec![],
            residual_trace: vec![],
            km_residual_trace: vec![],
            step_norms: vec![],
            step_sq_partial_sums: vec![],
            dist_trace: with_dist.then(Vec::new),
            stop_reason: StopReason::MaxIter,
            iterations: 0,
            perturbed,
            final_point: Point::zeros(0),
        }
    }

    pub(crate) fn push(
        &mut self,
        k: usize,
        r: f64,
        km: f64,
        step: f64,
        sum_sq: f64,
        dist: Option<f64>,
    ) {
        self.indices.push(k);
        self.residual_trace.push(r);
        self.km_residual_trace.push(km);
        self.step_norms.push(step);
        self.step_sq_partial_sums.push(sum_sq);
        if let (Some(trace), Some(d)) = (self.dist_trace.as_mut(), dist) {
            trace.push(d);
        }
    }

    pub fn converged(&self) -> bool {
        self.stop_reason == StopReason::Tolerance
    }

    pub fn final_residual(&self) -> f64 {
        self.residual_trace.last().copied().unwrap_or(f64::NAN)
    }

    pub fn header(&self) -> Vec<&'static str> {
        let mut h = vec!["k", "residual", "km_residual", "step_norm", "step_sq_sum"];
        if self.dist_trace.is_some() {
            h.push("dist");
        }
        h
    }

    /// Writes `k,residual,km_residual,step_norm,step_sq_sum[,dist]`, one row per
    /// recorded iteration.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(self.header())?;
        for i in 0..self.indices.len() {
            let mut row = vec![
                self.indices[i].to_string(),
                fmt_num(self.residual_trace[i]),
                fmt_num(self.km_residual_trace[i]),
                fmt_num(self.step_norms[i]),
                fmt_num(self.step_sq_partial_sums[i]),
            ];
            if let Some(d) = &self.dist_trace {
                row.push(fmt_num(d[i]));
            }
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Decimal scientific notation with 16 significant digits.
pub fn fmt_num(v: f64) -> String {
    format!("{v:.15e}")
}
