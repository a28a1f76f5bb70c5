use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::features::RegressionDataset;

/// Closed-form minimizer of
/// `(a - a_init)^T (mu I) (a - a_init) + sum (y - h^T a)^2`
/// from `(mu I + sum h h^T) a = mu a_init + sum h y`.
pub fn batch_ridge_solve(ds: &RegressionDataset, mu: f64, a_init: &[f64]) -> Result<Vec<f64>> {
    if ds.is_empty() {
        return Err(Error::Empty("ridge dataset".into()));
    }
    if !(mu > 0.0) {
        return Err(Error::Domain(format!("mu must be > 0, got {mu}")));
    }
    let m = a_init.len();
    if ds.width() != m {
        return Err(Error::Dimension {
            expected: m,
            got: ds.width(),
        });
    }
    let mut lhs = DMatrix::<f64>::identity(m, m) * mu;
    let mut rhs = DVector::from_column_slice(a_init) * mu;
    for (h, y) in ds.features.iter().zip(&ds.targets) {
        let hv = DVector::from_column_slice(h);
        lhs += &hv * hv.transpose();
        rhs += hv * *y;
    }
    let sol = lhs
        .clone()
        .cholesky()
        .map(|c| c.solve(&rhs))
        .or_else(|| lhs.lu().solve(&rhs))
        .ok_or_else(|| Error::Degenerate("ridge system is singular".into()))?;
    Ok(sol.iter().copied().collect())
}

/// Value of the regularized least-squares cost at `a`.
pub fn ridge_objective(ds: &RegressionDataset, mu: f64, a_init: &[f64], a: &[f64]) -> f64 {
    let reg: f64 = a
        .iter()
        .zip(a_init)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        * mu;
    let fit: f64 = ds
        .features
        .iter()
        .zip(&ds.targets)
        .map(|(h, y)| (y - super::dot(h, a)).powi(2))
        .sum();
    reg + fit
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ds() -> RegressionDataset {
        RegressionDataset {
            features: vec![
                vec![1.0, 0.0],
                vec![0.0, 1.0],
                vec![1.0, 1.0],
                vec![2.0, -1.0],
            ],
            targets: vec![1.0, 2.0, 3.1, -0.2],
        }
    }

    #[test]
    fn heavy_regularization_returns_prior() {
        let a = batch_ridge_solve(&ds(), 1e12, &[0.5, -0.5]).unwrap();
        assert!((a[0] - 0.5).abs() < 1e-6 && (a[1] + 0.5).abs() < 1e-6);
    }

    #[test]
    fn light_regularization_is_ols() {
        // OLS by hand: X^T X = [[6,-1],[-1,3]], X^T y = [3.7, 5.3]
        let det = 6.0 * 3.0 - 1.0;
        let ols = [(3.0 * 3.7 + 5.3) / det, (3.7 + 6.0 * 5.3) / det];
        let a = batch_ridge_solve(&ds(), 1e-12, &[1.0, 1.0]).unwrap();
        assert!((a[0] - ols[0]).abs() < 1e-8 && (a[1] - ols[1]).abs() < 1e-8);
    }

    #[test]
    fn minimizer_beats_perturbations() {
        let d = ds();
        let a = batch_ridge_solve(&d, 0.3, &[1.0, 1.0]).unwrap();
        let best = ridge_objective(&d, 0.3, &[1.0, 1.0], &a);
        for (dx, dy) in [(1e-3, 0.0), (0.0, -1e-3), (1e-2, 1e-2)] {
            let other = [a[0] + dx, a[1] + dy];
            assert!(ridge_objective(&d, 0.3, &[1.0, 1.0], &other) > best);
        }
    }

    #[test]
    fn errors() {
        assert!(batch_ridge_solve(&RegressionDataset::default(), 1.0, &[1.0]).is_err());
        assert!(batch_ridge_solve(&ds(), 1.0, &[1.0]).is_err());
    }
}
