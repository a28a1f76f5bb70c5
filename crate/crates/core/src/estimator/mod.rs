//! Online estimators for the differential frame-time model.
//!
//! [`RlsState`] is the covariance-form recursive least squares filter,
//! [`DcdRlsState`] replaces the covariance recursion by a few dichotomous
//! coordinate descent iterations on the correlation matrix, and
//! [`ArLmsState`] is the autoregressive NLMS baseline that only sees the
//! frame-time series.

mod arlms;
mod dcd;
mod ridge;
mod rls;
mod scaling;

pub use arlms::{ArLmsState, DEFAULT_AR_ORDER, DEFAULT_LMS_EPS, DEFAULT_LMS_STEP};
pub use dcd::{DcdParams, DcdRlsState};
pub use ridge::{batch_ridge_solve, ridge_objective};
pub use rls::{RlsSnapshot, RlsState, DEFAULT_LAMBDA, DEFAULT_MU};
pub use scaling::{FeatureScaling, DEFAULT_SCALE_WINDOW};

use crate::error::{Error, Result};

/// Outcome of one estimator update.
#[derive(Debug, Clone, PartialEq)]
pub struct UpdateResult {
    pub predicted_delta: f64,
    pub actual_delta: f64,
    /// `actual_delta - predicted_delta`.
    pub error: f64,
    pub coefficients_after: Vec<f64>,
}

/// A linear model over the (scaled) feature vector.
pub trait LinearEstimator {
    fn coefficients(&self) -> &[f64];

    fn update(&mut self, h: &[f64], actual_delta: f64) -> Result<UpdateResult>;

    fn dim(&self) -> usize {
        self.coefficients().len()
    }

    fn predict(&self, h: &[f64]) -> Result<f64> {
        check_dim(self.dim(), h)?;
        Ok(dot(self.coefficients(), h))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algo {
    Rls,
    DcdRls,
}

/// Arithmetic operations per update: `2M^2 + 8M + 2` for RLS and `17M`
/// for DCD-RLS.
pub fn op_count(m: usize, algo: Algo) -> usize {
    match algo {
        Algo::Rls => 2 * m * m + 8 * m + 2,
        Algo::DcdRls => 17 * m,
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn check_dim(m: usize, h: &[f64]) -> Result<()> {
    if h.len() != m {
        return Err(Error::Dimension {
            expected: m,
            got: h.len(),
        });
    }
    Ok(())
}

pub(crate) fn check_finite(h: &[f64], target: f64) -> Result<()> {
    if !target.is_finite() {
        return Err(Error::NonFinite(format!("target {target}")));
    }
    if let Some(v) = h.iter().find(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("feature {v}")));
    }
    Ok(())
}

pub(crate) fn check_lambda_mu(lambda: f64, mu: f64) -> Result<()> {
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(Error::Domain(format!(
            "lambda must be in (0, 1], got {lambda}"
        )));
    }
    if !(mu > 0.0) || !mu.is_finite() {
        return Err(Error::Domain(format!("mu must be > 0, got {mu}")));
    }
    Ok(())
}
