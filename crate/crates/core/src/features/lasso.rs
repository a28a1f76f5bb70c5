//! Lasso by cyclic coordinate descent with soft-thresholding.
//!
//! Minimizes `sum (y - X a)^2 + eta * sum |a_j|` on standardized columns
//! (zero mean, unit variance) with a free intercept. Coordinate updates run
//! on the Gram matrix, so a sweep costs `O(p^2)` regardless of row count.
//! Columns can be left out of the penalty; like the intercept they are then
//! always part of the model.

use crate::error::{Error, Result};

use super::RegressionDataset;

const TOLERANCE: f64 = 1e-8;
const MAX_SWEEPS: usize = 100_000;

#[derive(Debug, Clone, PartialEq)]
pub struct LassoFit {
    /// Coefficients in the original feature units.
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    /// Objective value after every sweep (standardized coordinates).
    pub objective_trace: Vec<f64>,
    pub converged: bool,
    standardized: Vec<f64>,
}

impl LassoFit {
    pub fn predict(&self, h: &[f64]) -> f64 {
        self.intercept
            + h.iter()
                .zip(&self.coefficients)
                .map(|(x, a)| x * a)
                .sum::<f64>()
    }

    pub fn nonzero(&self) -> usize {
        self.coefficients.iter().filter(|a| **a != 0.0).count()
    }
}

/// Sufficient statistics of a standardized dataset.
pub(crate) struct Standardized {
    means: Vec<f64>,
    sds: Vec<f64>,
    y_mean: f64,
    gram: Vec<Vec<f64>>,
    zty: Vec<f64>,
    yty: f64,
}

impl Standardized {
    pub(crate) fn new(ds: &RegressionDataset) -> Result<Self> {
        if ds.is_empty() {
            return Err(Error::Empty("lasso dataset".into()));
        }
        let n = ds.len() as f64;
        let p = ds.width();
        let mut means = vec![0.0; p];
        for row in &ds.features {
            for (m, x) in means.iter_mut().zip(row) {
                *m += x;
            }
        }
        means.iter_mut().for_each(|m| *m /= n);
        let y_mean = ds.targets.iter().sum::<f64>() / n;

        let mut sds = vec![0.0; p];
        for row in &ds.features {
            for j in 0..p {
                sds[j] += (row[j] - means[j]).powi(2);
            }
        }
        sds.iter_mut().for_each(|s| *s = (*s / n).sqrt());

        let mut gram = vec![vec![0.0; p]; p];
        let mut zty = vec![0.0; p];
        let mut yty = 0.0;
        let mut z = vec![0.0; p];
        for (row, y) in ds.features.iter().zip(&ds.targets) {
            for j in 0..p {
                z[j] = if sds[j] > 0.0 {
                    (row[j] - means[j]) / sds[j]
                } else {
                    0.0
                };
            }
            let yc = y - y_mean;
            yty += yc * yc;
            for j in 0..p {
                zty[j] += z[j] * yc;
                for k in j..p {
                    gram[j][k] += z[j] * z[k];
                }
            }
        }
        for j in 0..p {
            for k in 0..j {
                gram[j][k] = gram[k][j];
            }
        }
        Ok(Self {
            means,
            sds,
            y_mean,
            gram,
            zty,
            yty,
        })
    }

    fn width(&self) -> usize {
        self.means.len()
    }

    /// Smallest penalty at which every coefficient is zero.
    pub(crate) fn eta_max(&self) -> f64 {
        2.0 * self.zty.iter().fold(0.0_f64, |m, c| m.max(c.abs()))
    }

    fn objective(&self, b: &[f64], eta: f64) -> f64 {
        let p = b.len();
        let mut quad = 0.0;
        for j in 0..p {
            if b[j] == 0.0 {
                continue;
            }
            for k in 0..p {
                quad += b[j] * self.gram[j][k] * b[k];
            }
        }
        let lin: f64 = b.iter().zip(&self.zty).map(|(a, c)| a * c).sum();
        let l1: f64 = b.iter().map(|a| a.abs()).sum();
        (self.yty - 2.0 * lin + quad).max(0.0) + eta * l1
    }

    pub(crate) fn fit(&self, eta: f64, warm: Option<&[f64]>) -> LassoFit {
        let p = self.width();
        let mut b = warm.map_or_else(|| vec![0.0; p], <[f64]>::to_vec);
        let mut trace = Vec::new();
        let mut converged = false;
        for _ in 0..MAX_SWEEPS {
            let mut max_change = 0.0_f64;
            for j in 0..p {
                let gjj = self.gram[j][j];
                if gjj <= 0.0 {
                    b[j] = 0.0;
                    continue;
                }
                let mut rho = self.zty[j];
                for k in 0..p {
                    if k != j {
                        rho -= self.gram[j][k] * b[k];
                    }
                }
                let new = soft_threshold(rho, eta / 2.0) / gjj;
                max_change = max_change.max((new - b[j]).abs());
                b[j] = new;
            }
            trace.push(self.objective(&b, eta));
            if max_change < TOLERANCE {
                converged = true;
                break;
            }
        }
        let coefficients: Vec<f64> = (0..p)
            .map(|j| {
                if self.sds[j] > 0.0 {
                    b[j] / self.sds[j]
                } else {
                    0.0
                }
            })
            .collect();
        let intercept = self.y_mean
            - coefficients
                .iter()
                .zip(&self.means)
                .map(|(a, m)| a * m)
                .sum::<f64>();
        LassoFit {
            coefficients,
            intercept,
            objective_trace: trace,
            converged,
            standardized: b,
        }
    }
}

fn soft_threshold(x: f64, t: f64) -> f64 {
    if x > t {
        x - t
    } else if x < -t {
        x + t
    } else {
        0.0
    }
}

pub fn lasso_fit(ds: &RegressionDataset, eta: f64) -> Result<LassoFit> {
    if !(eta >= 0.0) {
        return Err(Error::Domain(format!("eta must be >= 0, got {eta}")));
    }
    Ok(Standardized::new(ds)?.fit(eta, None))
}

/// Log-spaced penalties from `eta_max` down to `eta_max * ratio`.
pub fn eta_grid(ds: &RegressionDataset, points: usize, ratio: f64) -> Result<Vec<f64>> {
    let top = Standardized::new(ds)?.eta_max();
    if points == 0 || !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::Domain(
            "grid needs points >= 1 and ratio in (0,1)".into(),
        ));
    }
    if top == 0.0 {
        return Ok(vec![0.0]);
    }
    if points == 1 {
        return Ok(vec![top]);
    }
    let step = ratio.ln() / (points - 1) as f64;
    Ok((0..points).map(|i| top * (step * i as f64).exp()).collect())
}

/// Fits every penalty of a descending grid, warm-starting each from the
/// previous solution.
pub fn lasso_path_fit(ds: &RegressionDataset, etas: &[f64]) -> Result<Vec<LassoFit>> {
    let st = Standardized::new(ds)?;
    Ok(path_on(&st, etas))
}

pub(crate) fn path_on(st: &Standardized, etas: &[f64]) -> Vec<LassoFit> {
    let mut out: Vec<LassoFit> = Vec::with_capacity(etas.len());
    for &eta in etas {
        let warm = out.last().map(|f| f.standardized.clone());
        out.push(st.fit(eta, warm.as_deref()));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn synthetic(n: usize, coef: &[f64], noise: f64, seed: u64) -> RegressionDataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut ds = RegressionDataset::default();
        for _ in 0..n {
            let x: Vec<f64> = (0..coef.len())
                .map(|_| rng.random_range(-1.0..1.0))
                .collect();
            let y = x.iter().zip(coef).map(|(a, b)| a * b).sum::<f64>()
                + 0.3
                + noise * rng.random_range(-1.0..1.0);
            ds.features.push(x);
            ds.targets.push(y);
        }
        ds
    }

    /// OLS with intercept through the normal equations.
    fn ols(ds: &RegressionDataset) -> Vec<f64> {
        let p = ds.width();
        let x = DMatrix::from_fn(ds.len(), p + 1, |i, j| {
            if j == 0 {
                1.0
            } else {
                ds.features[i][j - 1]
            }
        });
        let y = DVector::from_vec(ds.targets.clone());
        let sol = (x.transpose() * &x)
            .lu()
            .solve(&(x.transpose() * y))
            .unwrap();
        sol.iter().copied().collect()
    }

    #[test]
    fn zero_penalty_is_ols() {
        let ds = synthetic(200, &[1.5, -2.0, 0.7], 0.2, 1);
        let fit = lasso_fit(&ds, 0.0).unwrap();
        let reference = ols(&ds);
        assert!((fit.intercept - reference[0]).abs() < 1e-6 * reference[0].abs().max(1.0));
        for (a, b) in fit.coefficients.iter().zip(&reference[1..]) {
            assert!((a - b).abs() < 1e-6 * b.abs().max(1.0), "{a} vs {b}");
        }
    }

    #[test]
    fn large_penalty_zeroes_everything() {
        let ds = synthetic(100, &[1.0, 2.0], 0.1, 2);
        let top = Standardized::new(&ds).unwrap().eta_max();
        for eta in [top, 10.0 * top] {
            let fit = lasso_fit(&ds, eta).unwrap();
            assert!(fit.coefficients.iter().all(|a| *a == 0.0));
        }
        let fit = lasso_fit(&ds, 0.9 * top).unwrap();
        assert!(fit.nonzero() > 0);
    }

    #[test]
    fn objective_non_increasing_per_sweep() {
        let mut ds = synthetic(300, &[1.0, 0.0, 2.0, 0.0, 0.0], 0.5, 3);
        // make two columns strongly collinear so several sweeps are needed
        for row in &mut ds.features {
            row[1] = row[0] * 0.95 + row[1] * 0.05;
        }
        for eta in [0.0, 1.0, 20.0] {
            let fit = lasso_fit(&ds, eta).unwrap();
            assert!(fit.objective_trace.len() > 1);
            for w in fit.objective_trace.windows(2) {
                assert!(w[1] <= w[0] * (1.0 + 1e-12) + 1e-12, "{w:?}");
            }
        }
    }

    #[test]
    fn support_recovery_matches_best_subset() {
        let ds = synthetic(400, &[2.0, 0.0, -1.5, 0.0, 0.0], 0.3, 4);
        let top = Standardized::new(&ds).unwrap().eta_max();
        let fit = lasso_fit(&ds, 0.1 * top).unwrap();
        let support: Vec<usize> = (0..5).filter(|&j| fit.coefficients[j] != 0.0).collect();

        // exhaustive search over all size-2 subsets by residual sum of squares
        let mut best = (f64::INFINITY, (0, 0));
        for a in 0..5 {
            for b in a + 1..5 {
                let sub = RegressionDataset {
                    features: ds.features.iter().map(|r| vec![r[a], r[b]]).collect(),
                    targets: ds.targets.clone(),
                };
                let c = ols(&sub);
                let rss: f64 = sub
                    .features
                    .iter()
                    .zip(&sub.targets)
                    .map(|(r, y)| (y - c[0] - c[1] * r[0] - c[2] * r[1]).powi(2))
                    .sum();
                if rss < best.0 {
                    best = (rss, (a, b));
                }
            }
        }
        assert_eq!(best.1, (0, 2));
        assert_eq!(support, vec![0, 2]);
    }

    #[test]
    fn empty_and_negative_eta_rejected() {
        assert!(lasso_fit(&RegressionDataset::default(), 0.1).is_err());
        let ds = synthetic(10, &[1.0], 0.1, 5);
        assert!(lasso_fit(&ds, -1.0).is_err());
    }

    #[test]
    fn grid_is_descending_log_spaced() {
        let ds = synthetic(50, &[1.0, 1.0], 0.1, 6);
        let g = eta_grid(&ds, 50, 1e-4).unwrap();
        assert_eq!(g.len(), 50);
        assert!(g.windows(2).all(|w| w[1] < w[0]));
        assert!((g[49] / g[0] - 1e-4).abs() < 1e-12);
    }
}
