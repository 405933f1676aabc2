use nalgebra::{DMatrix, DVector, SVD};

use crate::error::{Error, Result};

const SVD_EPS: f64 = f64::EPSILON;
const SVD_MAX_ITER: usize = 10_000;

fn svd(x: &DMatrix<f64>, vectors: bool) -> Result<SVD<f64, nalgebra::Dyn, nalgebra::Dyn>> {
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric(
            "SVD of a matrix with non-finite entries".into(),
        ));
    }
    SVD::try_new(x.clone(), vectors, vectors, SVD_EPS, SVD_MAX_ITER)
        .ok_or_else(|| Error::Numeric("SVD did not converge".into()))
}

pub fn singular_values(x: &DMatrix<f64>) -> Result<DVector<f64>> {
    Ok(svd(x, false)?.singular_values)
}

/// Sum of singular values.
pub fn nuclear_norm(x: &DMatrix<f64>) -> Result<f64> {
    Ok(singular_values(x)?.sum())
}

/// Proximal map of `threshold · ‖·‖_*`: singular values are soft-thresholded,
/// `U · max(Σ − threshold, 0) · Vᵀ`.
pub fn nuclear_prox(x: &DMatrix<f64>, threshold: f64) -> Result<DMatrix<f64>> {
    if !(threshold >= 0.0) {
        return Err(Error::domain(format!(
            "threshold {threshold} must be nonnegative"
        )));
    }
    if threshold == 0.0 {
        return Ok(x.clone());
    }
    let mut d = svd(x, true)?;
    d.singular_values.apply(|s| *s = (*s - threshold).max(0.0));
    d.recompose().map_err(|e| Error::Numeric(e.to_string()))
}
