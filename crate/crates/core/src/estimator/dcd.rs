//! Exponentially weighted RLS with dichotomous coordinate descent
//! iterations.
//!
//! Per sample:
//!
//! 1. `R <- lambda R + h h^T`
//! 2. `e = y - h^T a`
//! 3. `beta = lambda r + e h`
//! 4. solve `R da = beta` approximately with leading-element DCD, leaving
//!    the residual in `r`
//! 5. `a <- a + da`
//!
//! DCD steps are powers of two of `h_amp`, so the inner loop only needs
//! additions and bit shifts in fixed point. At most `nu` coordinate updates
//! are spent per sample; the residual carries whatever is left over into
//! the next sample.

use super::{check_dim, check_finite, check_lambda_mu, dot, LinearEstimator, UpdateResult};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DcdParams {
    /// Maximum successful coordinate updates per sample.
    pub nu: usize,
    /// Number of amplitude levels (bit depth).
    pub mb: u32,
    /// Initial step amplitude.
    pub h_amp: f64,
}

impl Default for DcdParams {
    fn default() -> Self {
        Self {
            nu: 4,
            mb: 16,
            h_amp: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DcdRlsState {
    a: Vec<f64>,
    /// Row-major `M x M` correlation matrix.
    r_mat: Vec<f64>,
    residual: Vec<f64>,
    lambda: f64,
    mu: f64,
    params: DcdParams,
    step: u64,
    last_ops: usize,
}

impl DcdRlsState {
    /// `R = mu I`, `a = a_init` (ones by default), zero residual. This is the
    /// same regularized problem as RLS started from `P = I / mu`.
    pub fn new(
        m: usize,
        mu: f64,
        lambda: f64,
        a_init: Option<Vec<f64>>,
        params: DcdParams,
    ) -> Result<Self> {
        if m == 0 {
            return Err(Error::Domain("M must be >= 1".into()));
        }
        check_lambda_mu(lambda, mu)?;
        if params.nu == 0 || params.mb == 0 || !(params.h_amp > 0.0) {
            return Err(Error::Domain(
                "DCD needs nu >= 1, mb >= 1 and h_amp > 0".into(),
            ));
        }
        let a = a_init.unwrap_or_else(|| vec![1.0; m]);
        check_dim(m, &a)?;
        let mut r_mat = vec![0.0; m * m];
        for i in 0..m {
            r_mat[i * m + i] = mu;
        }
        Ok(Self {
            a,
            r_mat,
            residual: vec![0.0; m],
            lambda,
            mu,
            params,
            step: 0,
            last_ops: 0,
        })
    }

    pub fn params(&self) -> DcdParams {
        self.params
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn correlation(&self, i: usize, j: usize) -> f64 {
        self.r_mat[i * self.a.len() + j]
    }

    pub fn residual(&self) -> &[f64] {
        &self.residual
    }

    /// See [`super::RlsState::rescale_columns`].
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
            self.residual[i] *= factors[i];
            for j in 0..m {
                self.r_mat[i * m + j] *= factors[i] * factors[j];
            }
        }
        Ok(())
    }

    /// Arithmetic operations of the last update, excluding the rank-one
    /// correlation update.
    pub fn last_update_ops(&self) -> usize {
        self.last_ops
    }

    /// Leading-element DCD on `R dx = residual`. Returns the operation
    /// count.
    fn solve(&mut self, delta: &mut [f64]) -> usize {
        let m = self.a.len();
        let mut alpha = self.params.h_amp;
        let mut level = 1;
        let mut ops = 0;
        for _ in 0..self.params.nu {
            let (p, rp) = self
                .residual
                .iter()
                .copied()
                .enumerate()
                .max_by(|x, y| x.1.abs().total_cmp(&y.1.abs()))
                .expect("M >= 1");
            ops += m;
            let rpp = self.r_mat[p * m + p];
            while rp.abs() <= 0.5 * alpha * rpp && level <= self.params.mb {
                alpha *= 0.5;
                level += 1;
                ops += 1;
            }
            if level > self.params.mb {
                break;
            }
            let step = alpha.copysign(rp);
            delta[p] += step;
            for (j, r) in self.residual.iter_mut().enumerate() {
                *r -= step * self.r_mat[j * m + p];
            }
            ops += 2 * m + 1;
        }
        ops
    }
}

impl LinearEstimator for DcdRlsState {
    fn coefficients(&self) -> &[f64] {
        &self.a
    }

    fn update(&mut self, h: &[f64], actual_delta: f64) -> Result<UpdateResult> {
        let m = self.a.len();
        check_dim(m, h)?;
        check_finite(h, actual_delta)?;

        for i in 0..m {
            for j in 0..m {
                let v = &mut self.r_mat[i * m + j];
                *v = self.lambda * *v + h[i] * h[j];
            }
        }
        let predicted = dot(&self.a, h);
        let error = actual_delta - predicted;
        for (r, x) in self.residual.iter_mut().zip(h) {
            *r = self.lambda * *r + error * x;
        }
        let mut delta = vec![0.0; m];
        let ops = 2 * m + 3 * m + self.solve(&mut delta);
        for (a, d) in self.a.iter_mut().zip(&delta) {
            *a += d;
        }
        self.step += 1;
        self.last_ops = ops + m;
        Ok(UpdateResult {
            predicted_delta: predicted,
            actual_delta,
            error,
            coefficients_after: self.a.clone(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_regressor_keeps_coefficients() {
        let mut s = DcdRlsState::new(3, 1.0, 1.0, None, DcdParams::default()).unwrap();
        let r = s.update(&[0.0; 3], 2.0).unwrap();
        assert_eq!(s.coefficients(), &[1.0; 3]);
        assert_eq!(r.error, 2.0);
    }

    #[test]
    fn invalid_params() {
        let bad = DcdParams {
            nu: 0,
            ..DcdParams::default()
        };
        assert!(DcdRlsState::new(2, 1.0, 1.0, None, bad).is_err());
        assert!(DcdRlsState::new(2, 1.0, 0.0, None, DcdParams::default()).is_err());
    }

    #[test]
    fn ops_are_linear_in_m() {
        for m in [2usize, 4, 8, 16, 32] {
            let mut s = DcdRlsState::new(m, 1.0, 0.99, None, DcdParams::default()).unwrap();
            let mut worst = 0;
            for k in 0..50 {
                let h: Vec<f64> = (0..m)
                    .map(|i| ((k * 7 + i * 3) % 11) as f64 / 11.0)
                    .collect();
                s.update(&h, (k % 5) as f64).unwrap();
                worst = worst.max(s.last_update_ops());
            }
            let p = s.params();
            assert!(worst <= (6 + 3 * p.nu) * m + p.nu + p.mb as usize + 1);
        }
    }

    #[test]
    fn nan_rejected_without_mutation() {
        let mut s = DcdRlsState::new(2, 1.0, 1.0, None, DcdParams::default()).unwrap();
        let before = s.clone();
        assert!(s.update(&[f64::NAN, 0.0], 1.0).is_err());
        assert_eq!(s, before);
    }
}
