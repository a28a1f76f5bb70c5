use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{check_dim, check_finite, check_lambda_mu, LinearEstimator, UpdateResult};
use crate::error::{Error, Result};

pub const DEFAULT_LAMBDA: f64 = 1.0;
pub const DEFAULT_MU: f64 = 1e-14;

/// Covariance-form RLS.
#[derive(Debug, Clone, PartialEq)]
pub struct RlsState {
    a: Vec<f64>,
    p: DMatrix<f64>,
    lambda: f64,
    mu: f64,
    a_init: Vec<f64>,
    step: u64,
}

impl RlsState {
    /// `P = I / mu`, `a = a_init` (all ones when `None`).
    pub fn new(m: usize, mu: f64, lambda: f64, a_init: Option<Vec<f64>>) -> Result<Self> {
        if m == 0 {
            return Err(Error::Domain("M must be >= 1".into()));
        }
        check_lambda_mu(lambda, mu)?;
        let a_init = a_init.unwrap_or_else(|| vec![1.0; m]);
        check_dim(m, &a_init)?;
        Ok(Self {
            a: a_init.clone(),
            p: DMatrix::identity(m, m) / mu,
            lambda,
            mu,
            a_init,
            step: 0,
        })
    }

    pub fn with_defaults(m: usize) -> Result<Self> {
        Self::new(m, DEFAULT_MU, DEFAULT_LAMBDA, None)
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.p
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn a_init(&self) -> &[f64] {
        &self.a_init
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    /// Largest `|P - P^T|` entry.
    pub fn asymmetry(&self) -> f64 {
        (&self.p - self.p.transpose()).amax()
    }

    /// Re-expresses the state for features whose column `j` is multiplied
    /// by `factors[j]`.
    pub fn rescale_columns(&mut self, factors: &[f64]) -> Result<()> {
        check_dim(self.a.len(), factors)?;
        if factors.iter().any(|c| !(c.is_finite() && *c != 0.0)) {
            return Err(Error::Domain(
                "rescale factors must be finite and nonzero".into(),
            ));
        }
        let m = self.a.len();
        for i in 0..m {
            self.a[i] /= factors[i];
            self.a_init[i] /= factors[i];
            for j in 0..m {
                self.p[(i, j)] /= factors[i] * factors[j];
            }
        }
        Ok(())
    }

    pub fn snapshot(&self) -> RlsSnapshot {
        RlsSnapshot {
            coefficients: self.a.clone(),
            covariance: self
                .p
                .row_iter()
                .map(|r| r.iter().copied().collect())
                .collect(),
            lambda: self.lambda,
            mu: self.mu,
            a_init: self.a_init.clone(),
            step: self.step,
        }
    }

    pub fn from_snapshot(s: RlsSnapshot) -> Result<Self> {
        let m = s.coefficients.len();
        check_lambda_mu(s.lambda, s.mu)?;
        check_dim(m, &s.a_init)?;
        if s.covariance.len() != m || s.covariance.iter().any(|r| r.len() != m) {
            return Err(Error::Dimension {
                expected: m,
                got: s.covariance.len(),
            });
        }
        Ok(Self {
            a: s.coefficients,
            p: DMatrix::from_fn(m, m, |i, j| s.covariance[i][j]),
            lambda: s.lambda,
            mu: s.mu,
            a_init: s.a_init,
            step: s.step,
        })
    }
}

impl LinearEstimator for RlsState {
    fn coefficients(&self) -> &[f64] {
        &self.a
    }

    fn update(&mut self, h: &[f64], actual_delta: f64) -> Result<UpdateResult> {
        check_dim(self.a.len(), h)?;
        check_finite(h, actual_delta)?;
        let hv = DVector::from_column_slice(h);
        let a = DVector::from_column_slice(&self.a);
        let predicted = hv.dot(&a);
        let error = actual_delta - predicted;

        let ph = &self.p * &hv;
        // h^T P h + lambda is a scalar; no matrix inverse anywhere.
        let denom = hv.dot(&ph) + self.lambda;
        let gain = &ph / denom;
        let mut p = (&self.p - &gain * ph.transpose()) / self.lambda;
        let pt = p.transpose();
        p += pt;
        p *= 0.5;
        let a_new = a + &gain * error;
        if !a_new.iter().all(|v| v.is_finite()) || !p.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("update diverged".into()));
        }

        self.p = p;
        self.a = a_new.iter().copied().collect();
        self.step += 1;
        Ok(UpdateResult {
            predicted_delta: predicted,
            actual_delta,
            error,
            coefficients_after: self.a.clone(),
        })
    }
}

/// Serializable estimator checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RlsSnapshot {
    pub coefficients: Vec<f64>,
    pub covariance: Vec<Vec<f64>>,
    pub lambda: f64,
    pub mu: f64,
    pub a_init: Vec<f64>,
    pub step: u64,
}

impl RlsSnapshot {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("snapshot serializes")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn init_defaults() {
        let s = RlsState::with_defaults(4).unwrap();
        assert_eq!(s.coefficients(), &[1.0; 4]);
        assert_eq!(s.covariance(), &(DMatrix::identity(4, 4) * 1e14));
        assert_eq!(s.lambda(), 1.0);
        let s = RlsState::new(1, 1.0, 1.0, None).unwrap();
        assert_eq!(s.covariance()[(0, 0)], 1.0);
        assert_eq!(s.coefficients(), &[1.0]);
    }

    #[test]
    fn init_domain_errors() {
        assert!(RlsState::new(2, 1.0, 0.0, None).is_err());
        assert!(RlsState::new(2, 1.0, 1.5, None).is_err());
        assert!(RlsState::new(2, 0.0, 1.0, None).is_err());
        assert!(RlsState::new(0, 1.0, 1.0, None).is_err());
        assert!(RlsState::new(2, 1.0, 1.0, Some(vec![1.0])).is_err());
    }

    #[test]
    fn zero_regressor_scales_covariance() {
        let mut s = RlsState::new(3, 2.0, 0.5, Some(vec![0.1, 0.2, 0.3])).unwrap();
        let r = s.update(&[0.0; 3], 4.0).unwrap();
        assert_eq!(s.coefficients(), &[0.1, 0.2, 0.3]);
        assert_eq!(r.predicted_delta, 0.0);
        assert_eq!(r.error, 4.0);
        assert_eq!(s.covariance(), &(DMatrix::identity(3, 3) * (0.5 / 0.5)));
    }

    #[test]
    fn non_finite_leaves_state_untouched() {
        let mut s = RlsState::new(2, 1.0, 1.0, None).unwrap();
        let before = s.clone();
        assert!(s.update(&[f64::NAN, 1.0], 1.0).is_err());
        assert!(s.update(&[1.0, 1.0], f64::INFINITY).is_err());
        assert!(s.update(&[1.0], 1.0).is_err());
        assert_eq!(s, before);
    }

    #[test]
    fn predict_is_dot_product() {
        let s = RlsState::with_defaults(4).unwrap();
        let p = s.predict(&[-0.991, 44.0, 0.0, 0.0]).unwrap();
        assert!((p - (44.0 - 0.991)).abs() < 1e-12);
        assert_eq!(s.predict(&[0.0; 4]).unwrap(), 0.0);
        assert!(s.predict(&[0.0; 3]).is_err());
    }

    #[test]
    fn rescaling_is_a_reparametrization() {
        let rows = [
            ([1.0, 0.5, 2.0], 1.0),
            ([0.2, -1.0, 0.3], -0.4),
            ([1.5, 0.1, -0.7], 0.9),
            ([0.4, 0.8, 1.1], 0.2),
        ];
        let c = [1.0, 4.0, 0.25];
        let mut plain = RlsState::new(3, 0.1, 1.0, None).unwrap();
        let mut scaled = RlsState::new(3, 0.1, 1.0, None).unwrap();
        for (h, y) in &rows[..2] {
            plain.update(h, *y).unwrap();
            scaled.update(h, *y).unwrap();
        }
        scaled.rescale_columns(&c).unwrap();
        for (h, y) in &rows[2..] {
            plain.update(h, *y).unwrap();
            let hs: Vec<f64> = h.iter().zip(&c).map(|(x, k)| x * k).collect();
            scaled.update(&hs, *y).unwrap();
        }
        for i in 0..3 {
            let back = scaled.coefficients()[i] * c[i];
            assert!((back - plain.coefficients()[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn snapshot_round_trip() {
        let mut s = RlsState::new(2, 0.5, 0.99, None).unwrap();
        s.update(&[1.0, 2.0], 3.0).unwrap();
        let text = s.snapshot().to_toml();
        let back = RlsState::from_snapshot(RlsSnapshot::from_toml(&text).unwrap()).unwrap();
        assert_eq!(back, s);
    }
}
