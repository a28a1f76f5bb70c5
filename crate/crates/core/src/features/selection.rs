use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::lasso::{path_on, Standardized};
use super::{build_dataset, eta_grid, pearson_prune, PruneResult, RegressionDataset};
use crate::error::{Error, Result};
use crate::trace::Trace;

pub const DEFAULT_FOLDS: usize = 10;
pub const DEFAULT_GRID_POINTS: usize = 50;
pub const DEFAULT_GRID_RATIO: f64 = 1e-4;

/// The online feature layout: two frequency terms followed by the selected
/// frequency-independent counters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub counter_indices: Vec<usize>,
    pub counter_names: Vec<String>,
}

impl FeatureSpec {
    pub fn new(counter_indices: Vec<usize>, counter_names: Vec<String>) -> Result<Self> {
        if counter_indices.len() != counter_names.len() {
            return Err(Error::Dimension {
                expected: counter_indices.len(),
                got: counter_names.len(),
            });
        }
        let unique: HashSet<_> = counter_indices.iter().collect();
        if unique.len() != counter_indices.len() {
            return Err(Error::Domain("counter indices must be unique".into()));
        }
        Ok(Self {
            counter_indices,
            counter_names,
        })
    }

    /// Frequency terms only.
    pub fn frequency_only() -> Self {
        Self {
            counter_indices: Vec::new(),
            counter_names: Vec::new(),
        }
    }

    /// Every counter of `trace`, in order.
    pub fn all_counters(trace: &Trace) -> Self {
        Self {
            counter_indices: (0..trace.counter_count()).collect(),
            counter_names: trace.counter_names.clone(),
        }
    }

    /// Total feature count `M`.
    pub fn m(&self) -> usize {
        2 + self.counter_indices.len()
    }

    /// Checks indices and names against a trace's counter layout.
    pub fn check_against(&self, trace: &Trace) -> Result<()> {
        for (&i, name) in self.counter_indices.iter().zip(&self.counter_names) {
            match trace.counter_names.get(i) {
                Some(n) if n == name => {}
                Some(n) => {
                    return Err(Error::SpecMismatch(format!(
                        "expected counter `{name}` at index {i}, trace has `{n}`"
                    )))
                }
                None => {
                    return Err(Error::SpecMismatch(format!(
                        "counter `{name}` at index {i}, trace has {} counters",
                        trace.counter_count()
                    )))
                }
            }
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("feature spec serializes")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let raw: FeatureSpec = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Self::new(raw.counter_indices, raw.counter_names)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathPoint {
    pub eta: f64,
    /// Full-data coefficients `[a0, a1, counters...]`.
    pub coefficients: Vec<f64>,
    pub cv_mse: f64,
    pub cv_std_err: f64,
    /// Nonzero coefficients among the candidate counters.
    pub nonzero_counters: usize,
}

impl PathPoint {
    /// Online model size if this point were selected.
    pub fn feature_count(&self) -> usize {
        2 + self.nonzero_counters
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LassoPath {
    pub points: Vec<PathPoint>,
    pub candidate_indices: Vec<usize>,
    pub candidate_names: Vec<String>,
}

impl LassoPath {
    pub fn min_mse_index(&self) -> Option<usize> {
        self.points
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.cv_mse.total_cmp(&b.1.cv_mse))
            .map(|(i, _)| i)
    }

    /// Largest penalty whose CV error is within one standard error of the
    /// minimum.
    pub fn one_se_index(&self) -> Option<usize> {
        let best = self.min_mse_index()?;
        let bound = self.points[best].cv_mse + self.points[best].cv_std_err;
        self.points
            .iter()
            .enumerate()
            .filter(|(_, p)| p.cv_mse <= bound)
            .max_by(|a, b| a.1.eta.total_cmp(&b.1.eta))
            .map(|(i, _)| i)
    }

    /// Comma-separated `eta,cv_mse,cv_std_err,features` table.
    pub fn to_table(&self) -> String {
        let mut out = String::from("eta,cv_mse,cv_std_err,features\n");
        for p in &self.points {
            out.push_str(&format!(
                "{},{},{},{}\n",
                p.eta,
                p.cv_mse,
                p.cv_std_err,
                p.feature_count()
            ));
        }
        out
    }
}

/// Cross-validates the Lasso over a penalty grid with contiguous folds.
///
/// Column 0 and 1 of the dataset are the frequency terms; columns from 2 on
/// are the candidate counters named in `candidate_*`.
pub fn cross_validated_path(
    dataset: &RegressionDataset,
    etas: &[f64],
    folds: usize,
    candidate_indices: Vec<usize>,
    candidate_names: Vec<String>,
) -> Result<LassoPath> {
    if folds < 2 {
        return Err(Error::Domain("need at least 2 folds".into()));
    }
    if dataset.len() < folds {
        return Err(Error::Degenerate(format!(
            "{} rows cannot be split into {folds} folds",
            dataset.len()
        )));
    }
    if etas.is_empty() {
        return Err(Error::Empty("penalty grid".into()));
    }
    if dataset.width() != 2 + candidate_indices.len() {
        return Err(Error::Dimension {
            expected: 2 + candidate_indices.len(),
            got: dataset.width(),
        });
    }

    let n = dataset.len();
    let bounds: Vec<usize> = (0..=folds).map(|i| i * n / folds).collect();
    // fold_mse[f][e]
    let mut fold_mse = Vec::with_capacity(folds);
    for f in 0..folds {
        let (lo, hi) = (bounds[f], bounds[f + 1]);
        let mut train = dataset.slice(0..lo);
        let tail = dataset.slice(hi..n);
        train.features.extend(tail.features);
        train.targets.extend(tail.targets);
        let held = dataset.slice(lo..hi);
        let st = Standardized::new(&train)?;
        let fits = path_on(&st, etas);
        fold_mse.push(
            fits.iter()
                .map(|fit| {
                    held.features
                        .iter()
                        .zip(&held.targets)
                        .map(|(h, y)| (y - fit.predict(h)).powi(2))
                        .sum::<f64>()
                        / held.len() as f64
                })
                .collect::<Vec<_>>(),
        );
    }

    let full = path_on(&Standardized::new(dataset)?, etas);
    let k = folds as f64;
    let points = etas
        .iter()
        .enumerate()
        .map(|(e, &eta)| {
            let mses: Vec<f64> = fold_mse.iter().map(|row| row[e]).collect();
            let mean = mses.iter().sum::<f64>() / k;
            let var = mses.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (k - 1.0);
            let coefficients = full[e].coefficients.clone();
            let nonzero_counters = coefficients[2..].iter().filter(|a| **a != 0.0).count();
            PathPoint {
                eta,
                coefficients,
                cv_mse: mean,
                cv_std_err: (var / k).sqrt(),
                nonzero_counters,
            }
        })
        .collect();
    Ok(LassoPath {
        points,
        candidate_indices,
        candidate_names,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelectionRule {
    MinMse,
    OneSe,
}

impl std::str::FromStr for SelectionRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "min_mse" | "min-mse" => Ok(SelectionRule::MinMse),
            "one_se" | "one-se" => Ok(SelectionRule::OneSe),
            other => Err(Error::Config(format!("unknown selection rule `{other}`"))),
        }
    }
}

/// Feature layout induced by the counters with nonzero coefficients at the
/// chosen penalty. Both frequency terms are always part of the layout.
pub fn select_features(path: &LassoPath, rule: SelectionRule) -> Result<FeatureSpec> {
    let idx = match rule {
        SelectionRule::MinMse => path.min_mse_index(),
        SelectionRule::OneSe => path.one_se_index(),
    }
    .ok_or_else(|| Error::Empty("lasso path".into()))?;
    let point = &path.points[idx];
    let (indices, names) = point.coefficients[2..]
        .iter()
        .enumerate()
        .filter(|(_, a)| **a != 0.0)
        .map(|(j, _)| (path.candidate_indices[j], path.candidate_names[j].clone()))
        .unzip();
    FeatureSpec::new(indices, names)
}

#[derive(Debug, Clone)]
pub struct SelectionOutcome {
    pub prune: PruneResult,
    pub path: LassoPath,
    pub spec: FeatureSpec,
}

/// Pearson pruning, cross-validated Lasso and selection in one go.
pub fn run_selection(
    trace: &Trace,
    threshold: f64,
    folds: usize,
    rule: SelectionRule,
) -> Result<SelectionOutcome> {
    let prune = pearson_prune(trace, threshold)?;
    let candidates = FeatureSpec::new(
        prune.kept.clone(),
        prune
            .kept
            .iter()
            .map(|&i| trace.counter_names[i].clone())
            .collect(),
    )?;
    let dataset = build_dataset(trace, &candidates)?;
    let etas = eta_grid(&dataset, DEFAULT_GRID_POINTS, DEFAULT_GRID_RATIO)?;
    let path = cross_validated_path(
        &dataset,
        &etas,
        folds,
        candidates.counter_indices,
        candidates.counter_names,
    )?;
    let spec = select_features(&path, rule)?;
    Ok(SelectionOutcome { prune, path, spec })
}
