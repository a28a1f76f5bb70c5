use crate::error::{Error, Result};
use crate::trace::{Trace, TraceSample};

use super::FeatureSpec;

/// Regressors of one interval, in raw units:
/// `[t_prev * (f_prev / f_cur - 1), f_cur - f_prev (MHz), dx_1, ..., dx_n]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector(pub Vec<f64>);

impl FeatureVector {
    pub fn zeros(m: usize) -> Self {
        Self(vec![0.0; m])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

/// Builds the feature vector for the step `prev -> cur`.
pub fn feature_vector(
    prev: &TraceSample,
    cur: &TraceSample,
    spec: &FeatureSpec,
) -> Result<FeatureVector> {
    if !(cur.gpu_freq_mhz > 0.0) {
        return Err(Error::Domain(format!(
            "frequency must be > 0, got {}",
            cur.gpu_freq_mhz
        )));
    }
    let mut h = Vec::with_capacity(spec.m());
    h.push(prev.frame_time_ms * (prev.gpu_freq_mhz / cur.gpu_freq_mhz - 1.0));
    h.push(cur.gpu_freq_mhz - prev.gpu_freq_mhz);
    for &i in &spec.counter_indices {
        let (Some(a), Some(b)) = (prev.counters.get(i), cur.counters.get(i)) else {
            return Err(Error::Dimension {
                expected: i + 1,
                got: cur.counters.len(),
            });
        };
        h.push(b - a);
    }
    Ok(FeatureVector(h))
}

/// Consecutive-pair regression rows of one trace.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RegressionDataset {
    pub features: Vec<Vec<f64>>,
    /// Frame-time change `t_k - t_{k-1}` in ms.
    pub targets: Vec<f64>,
}

impl RegressionDataset {
    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn width(&self) -> usize {
        self.features.first().map_or(0, Vec::len)
    }

    pub fn push(&mut self, h: FeatureVector, target: f64) {
        self.features.push(h.0);
        self.targets.push(target);
    }

    /// Rows `range` as a new dataset.
    pub fn slice(&self, range: std::ops::Range<usize>) -> Self {
        Self {
            features: self.features[range.clone()].to_vec(),
            targets: self.targets[range].to_vec(),
        }
    }
}

pub fn build_dataset(trace: &Trace, spec: &FeatureSpec) -> Result<RegressionDataset> {
    if trace.len() < 2 {
        return Err(Error::Empty("need at least 2 samples".into()));
    }
    if let Some(&bad) = spec
        .counter_indices
        .iter()
        .find(|&&i| i >= trace.counter_count())
    {
        return Err(Error::Dimension {
            expected: trace.counter_count(),
            got: bad + 1,
        });
    }
    let mut ds = RegressionDataset::default();
    for pair in trace.samples.windows(2) {
        let h = feature_vector(&pair[0], &pair[1], spec)?;
        let target = pair[1].frame_time_ms - pair[0].frame_time_ms;
        if !target.is_finite() || !h.is_finite() {
            return Err(Error::NonFinite("regression row".into()));
        }
        ds.push(h, target);
    }
    Ok(ds)
}
