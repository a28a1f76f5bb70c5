use crate::error::{Error, Result};
use crate::trace::Trace;

/// Counters at or above this |r| with the GPU frequency are dropped.
pub const DEFAULT_PEARSON_THRESHOLD: f64 = 0.1;

/// Sample Pearson correlation. `None` when either series has zero variance.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    if x.len() < 2 {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some(sxy / (sxx.sqrt() * syy.sqrt()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PruneResult {
    /// Counter indices with |r| below the threshold.
    pub kept: Vec<usize>,
    /// Correlation of each counter with frequency; `None` marks a
    /// zero-variance counter, which is never kept.
    pub correlations: Vec<Option<f64>>,
}

impl PruneResult {
    pub fn zero_variance(&self) -> Vec<usize> {
        self.correlations
            .iter()
            .enumerate()
            .filter_map(|(i, r)| r.is_none().then_some(i))
            .collect()
    }
}

/// Keeps the counters that are (nearly) uncorrelated with GPU frequency.
pub fn pearson_prune(trace: &Trace, threshold: f64) -> Result<PruneResult> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::Domain(format!(
            "threshold must be in (0, 1), got {threshold}"
        )));
    }
    let freqs: Vec<f64> = trace.samples.iter().map(|s| s.gpu_freq_mhz).collect();
    let first = freqs.first().copied();
    if first.is_none() || freqs.iter().all(|f| Some(*f) == first) {
        return Err(Error::Degenerate(
            "trace spans a single frequency; correlation with frequency is undefined".into(),
        ));
    }
    let mut kept = Vec::new();
    let mut correlations = Vec::with_capacity(trace.counter_count());
    for i in 0..trace.counter_count() {
        let xs: Vec<f64> = trace.samples.iter().map(|s| s.counters[i]).collect();
        let r = pearson(&xs, &freqs);
        if let Some(r) = r {
            if r.abs() < threshold {
                kept.push(i);
            }
        }
        correlations.push(r);
    }
    Ok(PruneResult { kept, correlations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::{FrequencyTable, TraceSample};

    fn trace(rows: &[(f64, [f64; 3])]) -> Trace {
        let table = FrequencyTable::new(vec![200.0, 311.0, 400.0, 511.0]).unwrap();
        let samples = rows
            .iter()
            .enumerate()
            .map(|(i, (f, c))| TraceSample {
                timestamp: i as f64 * 0.05,
                frame_time_ms: 10.0,
                frame_count: 3,
                gpu_freq_mhz: *f,
                counters: c.to_vec(),
            })
            .collect();
        Trace::new(
            samples,
            vec!["a".into(), "b".into(), "c".into()],
            table,
            50.0,
        )
        .unwrap()
    }

    #[test]
    fn proportional_excluded_constant_disqualified() {
        let rows: Vec<(f64, [f64; 3])> = [200.0, 311.0, 400.0, 511.0, 200.0, 311.0, 400.0, 511.0]
            .iter()
            .enumerate()
            .map(|(i, &f)| (f, [2.0 * f, 7.0, if i < 4 { 1.0 } else { 2.0 }]))
            .collect();
        let r = pearson_prune(&trace(&rows), 0.1).unwrap();
        assert!((r.correlations[0].unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(r.correlations[1], None);
        assert_eq!(r.zero_variance(), vec![1]);
        // third counter alternates by block, uncorrelated with f
        assert_eq!(r.kept, vec![2]);
    }

    #[test]
    fn single_frequency_is_an_error() {
        let rows = vec![(200.0, [1.0, 2.0, 3.0]), (200.0, [2.0, 3.0, 4.0])];
        assert!(matches!(
            pearson_prune(&trace(&rows), 0.1),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn threshold_domain() {
        let rows = vec![(200.0, [1.0, 2.0, 3.0]), (311.0, [2.0, 3.0, 4.0])];
        assert!(pearson_prune(&trace(&rows), 0.0).is_err());
        assert!(pearson_prune(&trace(&rows), 1.0).is_err());
    }
}
