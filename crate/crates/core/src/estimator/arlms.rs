use std::collections::VecDeque;

use crate::error::{Error, Result};

pub const DEFAULT_AR_ORDER: usize = 10;
pub const DEFAULT_LMS_STEP: f64 = 0.5;
pub const DEFAULT_LMS_EPS: f64 = 1e-6;

/// Autoregressive frame-time predictor trained with normalized LMS.
#[derive(Debug, Clone, PartialEq)]
pub struct ArLmsState {
    w: Vec<f64>,
    /// Most recent sample first.
    history: VecDeque<f64>,
    step_size: f64,
    eps: f64,
}

impl ArLmsState {
    pub fn new(order: usize, step_size: f64) -> Result<Self> {
        if order == 0 {
            return Err(Error::Domain("AR order must be >= 1".into()));
        }
        if !(step_size > 0.0 && step_size < 2.0) {
            return Err(Error::Domain(format!(
                "NLMS step size must be in (0, 2), got {step_size}"
            )));
        }
        Ok(Self {
            w: vec![0.0; order],
            history: VecDeque::with_capacity(order),
            step_size,
            eps: DEFAULT_LMS_EPS,
        })
    }

    pub fn order(&self) -> usize {
        self.w.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.w
    }

    pub fn is_warm(&self) -> bool {
        self.history.len() == self.w.len()
    }

    fn forecast(&self) -> f64 {
        self.w.iter().zip(&self.history).map(|(w, x)| w * x).sum()
    }

    /// Prediction for the next sample, `None` while the history is filling.
    pub fn prediction(&self) -> Option<f64> {
        self.is_warm().then(|| self.forecast())
    }

    /// Learns from `frame_time`, then returns the forecast of the next one
    /// (zero until the history is full).
    pub fn update(&mut self, frame_time: f64) -> f64 {
        if self.is_warm() {
            let err = frame_time - self.forecast();
            let norm: f64 = self.history.iter().map(|x| x * x).sum();
            let g = self.step_size * err / (self.eps + norm);
            for (w, x) in self.w.iter_mut().zip(&self.history) {
                *w += g * x;
            }
        }
        if self.is_warm() {
            self.history.pop_back();
        }
        self.history.push_front(frame_time);
        self.prediction().unwrap_or(0.0)
    }
}
