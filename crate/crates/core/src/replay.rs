//! Streaming a trace through the online estimators.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::estimator::{ArLmsState, DcdParams, DEFAULT_AR_ORDER, DEFAULT_LMS_STEP};
use crate::features::FeatureSpec;
use crate::model::{FrameTimeModel, PredictionContext, SensitivityMethod};
use crate::trace::{oracle_frame_time, oracle_frame_time_derivative, Trace, WorkloadSpec};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ReplayAlgo {
    Rls,
    Dcd(DcdParams),
    ArLms,
}

impl std::str::FromStr for ReplayAlgo {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rls" => Ok(ReplayAlgo::Rls),
            "dcd" | "dcd_rls" => Ok(ReplayAlgo::Dcd(DcdParams::default())),
            "arlms" | "ar_lms" => Ok(ReplayAlgo::ArLms),
            other => Err(Error::Config(format!("unknown algorithm `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplayRow {
    pub k: usize,
    pub f_k: f64,
    pub t_actual: f64,
    pub t_pred: f64,
    /// False while the predictor has no usable output yet (AR-LMS history
    /// filling); `t_pred` is then 0.
    pub warm: bool,
    pub dtf_df: Option<f64>,
}

impl ReplayRow {
    pub fn abs_pct_err(&self) -> Option<f64> {
        (self.t_actual != 0.0)
            .then(|| ((self.t_actual - self.t_pred) / self.t_actual).abs() * 100.0)
    }
}

fn model_for(algo: ReplayAlgo, counters: usize) -> Result<FrameTimeModel> {
    match algo {
        ReplayAlgo::Rls => FrameTimeModel::rls(counters),
        ReplayAlgo::Dcd(p) => FrameTimeModel::dcd(counters, p),
        ReplayAlgo::ArLms => unreachable!("AR-LMS has no feature model"),
    }
}

fn selected(trace: &Trace, spec: &FeatureSpec, k: usize) -> Vec<f64> {
    spec.counter_indices
        .iter()
        .map(|&i| trace.samples[k].counters[i])
        .collect()
}

fn context(trace: &Trace, spec: &FeatureSpec, k: usize) -> PredictionContext {
    let (prev, cur) = (&trace.samples[k - 1], &trace.samples[k]);
    PredictionContext {
        prev_frame_time: prev.frame_time_ms,
        prev_freq: prev.gpu_freq_mhz,
        cur_freq: cur.gpu_freq_mhz,
        counter_deltas: spec
            .counter_indices
            .iter()
            .map(|&i| cur.counters[i] - prev.counters[i])
            .collect(),
    }
}

/// One-interval-ahead predictions for samples `1..len`.
///
/// For the feature models, interval `k` is predicted from sample `k-1`, the
/// frequency of `k` and the counter changes over `k`, then the model learns
/// from the realized frame time. AR-LMS only sees the frame-time series.
pub fn replay(trace: &Trace, spec: &FeatureSpec, algo: ReplayAlgo) -> Result<Vec<ReplayRow>> {
    spec.check_against(trace)?;
    if trace.len() < 2 {
        return Err(Error::Empty("replay needs at least 2 samples".into()));
    }
    let mut rows = Vec::with_capacity(trace.len() - 1);
    if let ReplayAlgo::ArLms = algo {
        let mut ar = ArLmsState::new(DEFAULT_AR_ORDER, DEFAULT_LMS_STEP)?;
        ar.update(trace.samples[0].frame_time_ms);
        for k in 1..trace.len() {
            let s = &trace.samples[k];
            let warm = ar.is_warm();
            let t_pred = ar.prediction().unwrap_or(0.0);
            ar.update(s.frame_time_ms);
            rows.push(ReplayRow {
                k,
                f_k: s.gpu_freq_mhz,
                t_actual: s.frame_time_ms,
                t_pred,
                warm,
                dtf_df: None,
            });
        }
        return Ok(rows);
    }

    let mut model = model_for(algo, spec.counter_indices.len())?;
    model.calibrate(&selected(trace, spec, 0))?;
    for k in 1..trace.len() {
        let s = &trace.samples[k];
        let ctx = context(trace, spec, k);
        let pred = model.predict_frame_time(&ctx)?;
        model.update(&ctx, s.frame_time_ms)?;
        model.calibrate(&selected(trace, spec, k))?;
        let sens = model.sensitivity(s.frame_time_ms, &trace.freq_table, s.gpu_freq_mhz)?;
        rows.push(ReplayRow {
            k,
            f_k: s.gpu_freq_mhz,
            t_actual: s.frame_time_ms,
            t_pred: pred.frame_time,
            warm: true,
            dtf_df: Some(sens.dtf_df),
        });
    }
    Ok(rows)
}

/// Rows as `k,f_k,t_actual,t_pred,abs_pct_err,dtf_df`; cold rows are left
/// out.
pub fn replay_table(rows: &[ReplayRow]) -> String {
    let mut out = String::from("k,f_k,t_actual,t_pred,abs_pct_err,dtf_df\n");
    for r in rows.iter().filter(|r| r.warm) {
        let ape = r.abs_pct_err().map(|v| v.to_string()).unwrap_or_default();
        let d = r.dtf_df.map(|v| v.to_string()).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.k, r.f_k, r.t_actual, r.t_pred, ape, d
        );
    }
    out
}

/// Per-interval sensitivity record.
#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityRow {
    pub k: usize,
    pub f_k: f64,
    pub t_actual: f64,
    pub dtf_df: f64,
    pub method: SensitivityMethod,
    /// `(jump, f_new, predicted frame time)` for every signed jump inside
    /// the table.
    pub candidates: Vec<(isize, f64, f64)>,
}

impl SensitivityRow {
    pub fn one_sided(&self) -> bool {
        self.method == SensitivityMethod::TwoPoint
    }
}

/// Streams the trace through RLS and, after each update, evaluates the
/// frequency sensitivity and the predicted frame time at `±1..±jumps`
/// table levels away from the current frequency.
pub fn sensitivity_replay(
    trace: &Trace,
    spec: &FeatureSpec,
    jumps: usize,
) -> Result<Vec<SensitivityRow>> {
    spec.check_against(trace)?;
    if trace.len() < 2 {
        return Err(Error::Empty("replay needs at least 2 samples".into()));
    }
    let table = &trace.freq_table;
    let mut model = FrameTimeModel::rls(spec.counter_indices.len())?;
    model.calibrate(&selected(trace, spec, 0))?;
    let mut rows = Vec::with_capacity(trace.len() - 1);
    for k in 1..trace.len() {
        let s = &trace.samples[k];
        let ctx = context(trace, spec, k);
        model.update(&ctx, s.frame_time_ms)?;
        model.calibrate(&selected(trace, spec, k))?;
        let sens = model.sensitivity(s.frame_time_ms, table, s.gpu_freq_mhz)?;
        let level = table
            .level_of(s.gpu_freq_mhz)
            .expect("trace frequencies are table members");
        let mut candidates = Vec::new();
        for j in 1..=jumps as isize {
            for signed in [-j, j] {
                if let Some(f_new) = table.shifted(level, signed) {
                    let t = s.frame_time_ms
                        + model.candidate_delta(s.frame_time_ms, s.gpu_freq_mhz, f_new)?;
                    candidates.push((signed, f_new, t));
                }
            }
        }
        rows.push(SensitivityRow {
            k,
            f_k: s.gpu_freq_mhz,
            t_actual: s.frame_time_ms,
            dtf_df: sens.dtf_df,
            method: sens.method,
            candidates,
        });
    }
    Ok(rows)
}

pub fn sensitivity_table(rows: &[SensitivityRow], jumps: usize) -> String {
    let mut out = String::from("k,f_k,t_actual,dtf_df,method");
    let signed: Vec<isize> = (1..=jumps as isize)
        .rev()
        .map(|j| -j)
        .chain(1..=jumps as isize)
        .collect();
    for j in &signed {
        let _ = write!(out, ",t_at_{j:+}");
    }
    out.push('\n');
    for r in rows {
        let method = match r.method {
            SensitivityMethod::Lagrange3 => "lagrange3",
            SensitivityMethod::TwoPoint => "two_point_one_sided",
        };
        let _ = write!(
            out,
            "{},{},{},{},{}",
            r.k, r.f_k, r.t_actual, r.dtf_df, method
        );
        for j in &signed {
            match r.candidates.iter().find(|c| c.0 == *j) {
                Some(c) => {
                    let _ = write!(out, ",{}", c.2);
                }
                None => out.push(','),
            }
        }
        out.push('\n');
    }
    out
}

/// Accuracy of a sensitivity replay against the analytic oracle.
#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityAccuracy {
    /// Derivative RMSE over the range of the oracle derivative, percent.
    pub derivative_nrmse: f64,
    /// `(jump distance, MAPE of the predicted frame time, samples)`.
    pub jump_mape: Vec<(usize, f64, usize)>,
}

/// Compares rows `warmup..` with the noiseless oracle. `complexities[k]` is
/// the complexity behind trace sample `k`.
pub fn sensitivity_accuracy(
    rows: &[SensitivityRow],
    workload: &WorkloadSpec,
    complexities: &[f64],
    warmup: usize,
) -> Result<SensitivityAccuracy> {
    let rows: Vec<&SensitivityRow> = rows.iter().filter(|r| r.k >= warmup).collect();
    if rows.is_empty() {
        return Err(Error::Empty("no rows after warmup".into()));
    }
    let c_of = |k: usize| {
        complexities
            .get(k)
            .copied()
            .ok_or_else(|| Error::Dimension {
                expected: k + 1,
                got: complexities.len(),
            })
    };
    let mut sq = 0.0;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut by_jump: Vec<(f64, usize)> = Vec::new();
    for r in &rows {
        let c = c_of(r.k)?;
        let truth = oracle_frame_time_derivative(workload, c, r.f_k)?;
        sq += (r.dtf_df - truth).powi(2);
        lo = lo.min(truth);
        hi = hi.max(truth);
        for &(j, f_new, t) in &r.candidates {
            let d = j.unsigned_abs();
            if by_jump.len() < d {
                by_jump.resize(d, (0.0, 0));
            }
            let truth = oracle_frame_time(workload, c, f_new)?;
            by_jump[d - 1].0 += ((t - truth) / truth).abs() * 100.0;
            by_jump[d - 1].1 += 1;
        }
    }
    let rmse = (sq / rows.len() as f64).sqrt();
    let derivative_nrmse = if hi > lo {
        rmse / (hi - lo) * 100.0
    } else {
        f64::INFINITY
    };
    Ok(SensitivityAccuracy {
        derivative_nrmse,
        jump_mape: by_jump
            .into_iter()
            .enumerate()
            .filter(|(_, (_, n))| *n > 0)
            .map(|(i, (s, n))| (i + 1, s / n as f64, n))
            .collect(),
    })
}
