use crate::error::{Error, Result};

/// Default rolling-APE convergence threshold in percent.
pub const DEFAULT_CONVERGENCE_THRESHOLD: f64 = 10.0;
pub const CONVERGENCE_WINDOW: usize = 5;

/// Prediction error summary. Percentages are in percent, not fractions.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub mape: f64,
    pub median_ape: f64,
    pub nrmse: f64,
    /// Start of the first interval from which the rolling APE mean stays
    /// below the threshold; `None` if it never settles.
    pub convergence_time_ms: Option<f64>,
    /// Points left out of the APE terms because the actual value is zero.
    pub excluded: usize,
    pub count: usize,
}

/// Absolute percentage errors; `None` where the actual value is zero.
pub fn ape_series(actual: &[f64], predicted: &[f64]) -> Vec<Option<f64>> {
    actual
        .iter()
        .zip(predicted)
        .map(|(a, p)| (*a != 0.0).then(|| ((a - p) / a).abs() * 100.0))
        .collect()
}

pub fn compute_metrics(
    actual: &[f64],
    predicted: &[f64],
    threshold_pct: f64,
    period_ms: f64,
) -> Result<MetricsReport> {
    if actual.len() != predicted.len() {
        return Err(Error::Dimension {
            expected: actual.len(),
            got: predicted.len(),
        });
    }
    if actual.is_empty() {
        return Err(Error::Empty("metric series".into()));
    }
    if actual.iter().chain(predicted).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("metric series".into()));
    }

    let apes = ape_series(actual, predicted);
    let mut valid: Vec<f64> = apes.iter().flatten().copied().collect();
    let excluded = apes.len() - valid.len();
    let mape = if valid.is_empty() {
        0.0
    } else {
        valid.iter().sum::<f64>() / valid.len() as f64
    };
    valid.sort_by(f64::total_cmp);
    let median_ape = median(&valid);

    let n = actual.len() as f64;
    let rmse = (actual
        .iter()
        .zip(predicted)
        .map(|(a, p)| (a - p).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    let (lo, hi) = actual
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), a| {
            (lo.min(*a), hi.max(*a))
        });
    let range = hi - lo;
    let nrmse = if range > 0.0 {
        rmse / range * 100.0
    } else if rmse == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };

    let convergence_time_ms = convergence_index(&apes, threshold_pct).map(|i| i as f64 * period_ms);
    Ok(MetricsReport {
        mape,
        median_ape,
        nrmse,
        convergence_time_ms,
        excluded,
        count: actual.len(),
    })
}

/// First index after which the trailing mean of up to
/// [`CONVERGENCE_WINDOW`] APE values stays below `threshold_pct`.
pub fn convergence_index(apes: &[Option<f64>], threshold_pct: f64) -> Option<usize> {
    let rolling: Vec<bool> = (0..apes.len())
        .map(|i| {
            let window: Vec<f64> = apes[i.saturating_sub(CONVERGENCE_WINDOW - 1)..=i]
                .iter()
                .flatten()
                .copied()
                .collect();
            window.is_empty() || window.iter().sum::<f64>() / (window.len() as f64) < threshold_pct
        })
        .collect();
    let last_bad = rolling.iter().rposition(|ok| !ok);
    match last_bad {
        None => Some(0),
        Some(i) if i + 1 < apes.len() => Some(i + 1),
        Some(_) => None,
    }
}

fn median(sorted: &[f64]) -> f64 {
    match sorted.len() {
        0 => 0.0,
        n if n % 2 == 1 => sorted[n / 2],
        n => 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]),
    }
}
