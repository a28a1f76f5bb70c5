//! Offline feature selection and per-interval feature construction.

mod dataset;
mod lasso;
mod pearson;
mod selection;

pub use dataset::{build_dataset, feature_vector, FeatureVector, RegressionDataset};
pub use lasso::{eta_grid, lasso_fit, lasso_path_fit, LassoFit};
pub use pearson::{pearson, pearson_prune, PruneResult, DEFAULT_PEARSON_THRESHOLD};
pub use selection::{
    cross_validated_path, run_selection, select_features, FeatureSpec, LassoPath, PathPoint,
    SelectionOutcome, SelectionRule, DEFAULT_FOLDS, DEFAULT_GRID_POINTS, DEFAULT_GRID_RATIO,
};
