use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::features::FeatureVector;

use super::check_dim;

/// Samples over which per-counter scales are learned before freezing.
pub const DEFAULT_SCALE_WINDOW: usize = 10;

/// Maps raw feature vectors to the estimator's working units.
///
/// The frame-time term stays in ms, the frequency term moves from MHz to
/// GHz, and each counter delta is divided by the largest absolute counter
/// value seen during the first `window` samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureScaling {
    pub counter_scales: Vec<f64>,
    pub window: usize,
    pub seen: usize,
}

impl FeatureScaling {
    pub fn new(counters: usize, window: usize) -> Self {
        Self {
            counter_scales: vec![0.0; counters],
            window,
            seen: 0,
        }
    }

    pub fn frozen(&self) -> bool {
        self.seen >= self.window
    }

    /// Feeds raw values of the selected counters. Returns the per-column
    /// factors by which already scaled feature vectors change, if any scale
    /// moved.
    pub fn observe(&mut self, counters: &[f64]) -> Option<Vec<f64>> {
        if self.frozen() {
            return None;
        }
        let mut factors = vec![1.0; 2 + self.counter_scales.len()];
        let mut changed = false;
        for (i, x) in counters.iter().enumerate().take(self.counter_scales.len()) {
            let old = self.counter_scale(i);
            self.counter_scales[i] = self.counter_scales[i].max(x.abs());
            let new = self.counter_scale(i);
            if new != old {
                factors[2 + i] = old / new;
                changed = true;
            }
        }
        self.seen += 1;
        changed.then_some(factors)
    }

    fn counter_scale(&self, i: usize) -> f64 {
        let s = self.counter_scales[i];
        if s > 0.0 {
            s
        } else {
            1.0
        }
    }

    pub fn scale(&self, raw: &FeatureVector) -> Result<Vec<f64>> {
        check_dim(2 + self.counter_scales.len(), raw.as_slice())?;
        let h = raw.as_slice();
        let mut out = Vec::with_capacity(h.len());
        out.push(h[0]);
        out.push(h[1] / 1000.0);
        out.extend(
            h[2..]
                .iter()
                .enumerate()
                .map(|(i, x)| x / self.counter_scale(i)),
        );
        Ok(out)
    }
}
