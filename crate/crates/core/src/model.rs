//! Differential frame-time model.
//!
//! The next frame time is predicted as
//!
//! ```text
//! t_k = t_{k-1} + a0 * t_{k-1} * (f_{k-1} / f_k - 1) + a1 * (f_k - f_{k-1}) + sum a_{i+1} dx_i
//! ```
//!
//! with coefficients learned online. The counters are frequency
//! independent, so a what-if change of frequency only moves the first two
//! terms, which gives the candidate delta and the frequency sensitivity.
//!
//! The estimators see frequency in GHz and counters divided by a learned
//! scale. Everything crossing this module's API is in ms and MHz.

use crate::error::{Error, Result};
use crate::estimator::{
    DcdParams, DcdRlsState, FeatureScaling, LinearEstimator, RlsState, UpdateResult,
    DEFAULT_LAMBDA, DEFAULT_MU, DEFAULT_SCALE_WINDOW,
};
use crate::features::FeatureVector;
use crate::trace::FrequencyTable;

/// Inputs of one prediction in raw units.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionContext {
    pub prev_frame_time: f64,
    pub prev_freq: f64,
    pub cur_freq: f64,
    pub counter_deltas: Vec<f64>,
}

impl PredictionContext {
    pub fn features(&self) -> Result<FeatureVector> {
        if !(self.cur_freq > 0.0 && self.prev_freq > 0.0) {
            return Err(Error::Domain("frequencies must be > 0".into()));
        }
        if !(self.prev_frame_time >= 0.0) {
            return Err(Error::Domain(format!(
                "previous frame time must be >= 0, got {}",
                self.prev_frame_time
            )));
        }
        let mut h = Vec::with_capacity(2 + self.counter_deltas.len());
        h.push(self.prev_frame_time * (self.prev_freq / self.cur_freq - 1.0));
        h.push(self.cur_freq - self.prev_freq);
        h.extend_from_slice(&self.counter_deltas);
        Ok(FeatureVector(h))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SensitivityMethod {
    TwoPoint,
    Lagrange3,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensitivityEstimate {
    /// ms per MHz.
    pub dtf_df: f64,
    pub at_freq: f64,
    pub method: SensitivityMethod,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub frame_time: f64,
    /// The raw model output was negative and has been clamped to zero.
    pub clamped: bool,
}

/// Either online estimator behind one interface.
#[derive(Debug, Clone, PartialEq)]
pub enum Estimator {
    Rls(RlsState),
    Dcd(DcdRlsState),
}

impl Estimator {
    fn rescale_columns(&mut self, factors: &[f64]) -> Result<()> {
        match self {
            Estimator::Rls(s) => s.rescale_columns(factors),
            Estimator::Dcd(s) => s.rescale_columns(factors),
        }
    }
}

impl LinearEstimator for Estimator {
    fn coefficients(&self) -> &[f64] {
        match self {
            Estimator::Rls(s) => s.coefficients(),
            Estimator::Dcd(s) => s.coefficients(),
        }
    }

    fn update(&mut self, h: &[f64], actual_delta: f64) -> Result<UpdateResult> {
        match self {
            Estimator::Rls(s) => s.update(h, actual_delta),
            Estimator::Dcd(s) => s.update(h, actual_delta),
        }
    }
}

/// Online frame-time model: an estimator plus the feature scaling it was
/// trained under.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameTimeModel {
    estimator: Estimator,
    scaling: FeatureScaling,
    updates: u64,
}

impl FrameTimeModel {
    pub fn new(estimator: Estimator, scaling: FeatureScaling) -> Result<Self> {
        let m = estimator.dim();
        if m != 2 + scaling.counter_scales.len() {
            return Err(Error::Dimension {
                expected: m,
                got: 2 + scaling.counter_scales.len(),
            });
        }
        Ok(Self {
            estimator,
            scaling,
            updates: 0,
        })
    }

    /// RLS with default initialization over `counters` selected counters.
    pub fn rls(counters: usize) -> Result<Self> {
        let m = 2 + counters;
        Self::new(
            Estimator::Rls(RlsState::new(m, DEFAULT_MU, DEFAULT_LAMBDA, None)?),
            FeatureScaling::new(counters, DEFAULT_SCALE_WINDOW),
        )
    }

    pub fn dcd(counters: usize, params: DcdParams) -> Result<Self> {
        let m = 2 + counters;
        Self::new(
            Estimator::Dcd(DcdRlsState::new(
                m,
                DEFAULT_MU,
                DEFAULT_LAMBDA,
                None,
                params,
            )?),
            FeatureScaling::new(counters, DEFAULT_SCALE_WINDOW),
        )
    }

    pub fn estimator(&self) -> &Estimator {
        &self.estimator
    }

    pub fn scaling(&self) -> &FeatureScaling {
        &self.scaling
    }

    pub fn dim(&self) -> usize {
        self.estimator.dim()
    }

    /// Frame-time coefficient `a0` (dimensionless).
    pub fn a0(&self) -> f64 {
        self.estimator.coefficients()[0]
    }

    /// Frequency coefficient `a1` in ms per MHz.
    pub fn a1(&self) -> f64 {
        self.estimator.coefficients()[1] / 1000.0
    }

    /// Coefficients in raw units: `[a0, a1 (ms/MHz), ms per counter unit...]`.
    pub fn raw_coefficients(&self) -> Vec<f64> {
        let a = self.estimator.coefficients();
        let mut out = vec![a[0], a[1] / 1000.0];
        for (i, c) in a[2..].iter().enumerate() {
            let s = self.scaling.counter_scales[i];
            out.push(if s > 0.0 { c / s } else { *c });
        }
        out
    }

    /// Feeds raw values of the selected counters to the scale window.
    /// Before the first update the estimator only holds its prior, which
    /// is defined in scaled units and is left alone; afterwards a scale
    /// change re-expresses the learned state.
    pub fn calibrate(&mut self, counters: &[f64]) -> Result<()> {
        if let Some(factors) = self.scaling.observe(counters) {
            if self.updates > 0 {
                self.estimator.rescale_columns(&factors)?;
            }
        }
        Ok(())
    }

    pub fn predict_delta(&self, ctx: &PredictionContext) -> Result<f64> {
        let h = self.scaling.scale(&ctx.features()?)?;
        self.estimator.predict(&h)
    }

    /// `t_{k-1} + h^T a`, clamped at zero.
    pub fn predict_frame_time(&self, ctx: &PredictionContext) -> Result<Prediction> {
        let raw = ctx.prev_frame_time + self.predict_delta(ctx)?;
        Ok(if raw < 0.0 {
            Prediction {
                frame_time: 0.0,
                clamped: true,
            }
        } else {
            Prediction {
                frame_time: raw,
                clamped: false,
            }
        })
    }

    /// Learns from the realized frame time of the interval described by
    /// `ctx`.
    pub fn update(
        &mut self,
        ctx: &PredictionContext,
        actual_frame_time: f64,
    ) -> Result<UpdateResult> {
        let h = self.scaling.scale(&ctx.features()?)?;
        let r = self
            .estimator
            .update(&h, actual_frame_time - ctx.prev_frame_time)?;
        self.updates += 1;
        Ok(r)
    }

    /// Predicted frame-time change when moving from `f_k` to `f_new` with
    /// frame time `frame_time` observed at `f_k`.
    pub fn candidate_delta(&self, frame_time: f64, f_k: f64, f_new: f64) -> Result<f64> {
        candidate_delta(self.a0(), self.a1(), frame_time, f_k, f_new)
    }

    pub fn sensitivity_two_point(
        &self,
        frame_time: f64,
        f_k: f64,
        f_new: f64,
    ) -> Result<SensitivityEstimate> {
        if f_new == f_k {
            return Err(Error::Domain(
                "two-point sensitivity needs f_new != f_k".into(),
            ));
        }
        Ok(SensitivityEstimate {
            dtf_df: self.candidate_delta(frame_time, f_k, f_new)? / (f_new - f_k),
            at_freq: f_k,
            method: SensitivityMethod::TwoPoint,
        })
    }

    /// Three-point derivative at an interior table frequency.
    pub fn sensitivity_lagrange(
        &self,
        frame_time: f64,
        table: &FrequencyTable,
        f_k: f64,
    ) -> Result<SensitivityEstimate> {
        let (lo, hi) = table.neighbors(f_k).ok_or_else(|| {
            Error::Domain(format!(
                "{f_k} MHz has no neighbor on both sides; use the two-point sensitivity"
            ))
        })?;
        let t_lo = self.candidate_delta(frame_time, f_k, lo)?;
        let t_hi = self.candidate_delta(frame_time, f_k, hi)?;
        Ok(SensitivityEstimate {
            dtf_df: lagrange_derivative(lo, t_lo, f_k, 0.0, hi, t_hi),
            at_freq: f_k,
            method: SensitivityMethod::Lagrange3,
        })
    }

    /// Lagrange inside the table, one-sided two-point at either end.
    pub fn sensitivity(
        &self,
        frame_time: f64,
        table: &FrequencyTable,
        f_k: f64,
    ) -> Result<SensitivityEstimate> {
        if table.neighbors(f_k).is_some() {
            return self.sensitivity_lagrange(frame_time, table, f_k);
        }
        let level = table
            .level_of(f_k)
            .ok_or_else(|| Error::Domain(format!("{f_k} MHz is not in the frequency table")))?;
        let other = table
            .shifted(level, 1)
            .or_else(|| table.shifted(level, -1))
            .expect("table has at least two entries");
        self.sensitivity_two_point(frame_time, f_k, other)
    }
}

/// `a0 * t * (f_k / f_new - 1) + a1 * (f_new - f_k)` with `a1` in ms/MHz.
pub fn candidate_delta(a0: f64, a1: f64, frame_time: f64, f_k: f64, f_new: f64) -> Result<f64> {
    if !(f_new > 0.0 && f_k > 0.0) {
        return Err(Error::Domain("frequencies must be > 0".into()));
    }
    Ok(a0 * frame_time * (f_k / f_new - 1.0) + a1 * (f_new - f_k))
}

/// Derivative at `f1` of the parabola through three points with
/// `f0 < f1 < f2`.
pub fn lagrange_derivative(f0: f64, t0: f64, f1: f64, t1: f64, f2: f64, t2: f64) -> f64 {
    let d1 = f1 - f0;
    let d2 = f2 - f1;
    if d1 == d2 {
        return (t2 - t0) / (2.0 * d1);
    }
    (d1 * d1 * t2 + (d2 * d2 - d1 * d1) * t1 - d2 * d2 * t0) / (d1 * d2 * (d1 + d2))
}
