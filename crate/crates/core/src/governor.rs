//! Closed-loop DVFS simulation on the workload oracle.
//!
//! Each interval renders `frames_per_interval` frames of the scheduled
//! complexity. A policy picks the GPU frequency before the interval starts;
//! the oracle then realizes the frame time at that frequency. One noise
//! draw per interval is shared by every frequency, so the oracle policy
//! sees exactly the frame the other policies render.
//!
//! An interval whose realized frame time misses the budget counts as a
//! violation and is charged as if the governor had boosted to the maximum
//! frequency for it.

use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureSpec;
use crate::model::{FrameTimeModel, PredictionContext};
use crate::trace::{oracle_counters_noisy, oracle_frame_time, FrequencyTable, WorkloadSpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PowerModel {
    pub p_static: f64,
    /// W per GHz^3.
    pub p_dyn_coeff: f64,
    pub p_idle: f64,
}

impl Default for PowerModel {
    fn default() -> Self {
        Self {
            p_static: 0.5,
            p_dyn_coeff: 8.0,
            p_idle: 0.2,
        }
    }
}

impl PowerModel {
    pub fn validate(&self) -> Result<()> {
        if [self.p_static, self.p_dyn_coeff, self.p_idle]
            .iter()
            .any(|p| !(*p >= 0.0 && p.is_finite()))
        {
            return Err(Error::Config(
                "power model terms must be finite and >= 0".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GovernorConfig {
    pub fps_target: f64,
    pub period_ms: f64,
    pub up_threshold: f64,
    pub down_threshold: f64,
    /// Intervals the RLS policy holds the maximum frequency while learning.
    pub warmup: usize,
}

impl Default for GovernorConfig {
    fn default() -> Self {
        Self {
            fps_target: 60.0,
            period_ms: 50.0,
            up_threshold: 0.8,
            down_threshold: 0.3,
            warmup: 10,
        }
    }
}

impl GovernorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.fps_target > 0.0 && self.period_ms > 0.0) {
            return Err(Error::Config("fps_target and period_ms must be > 0".into()));
        }
        if !(0.0 < self.down_threshold
            && self.down_threshold < self.up_threshold
            && self.up_threshold <= 1.0)
        {
            return Err(Error::Config(
                "thresholds must satisfy 0 < down < up <= 1".into(),
            ));
        }
        if self.frames_per_interval() == 0 {
            return Err(Error::Config("period is shorter than one frame".into()));
        }
        Ok(())
    }

    /// Per-frame time budget in ms.
    pub fn budget_ms(&self) -> f64 {
        1000.0 / self.fps_target
    }

    pub fn frames_per_interval(&self) -> u32 {
        (self.period_ms * self.fps_target / 1000.0).round() as u32
    }

    fn active_ms(&self, frame_time: f64) -> f64 {
        self.frames_per_interval() as f64 * frame_time
    }
}

/// Energy in joules of one interval with `active_ms` of rendering at
/// `f_mhz`.
pub fn interval_energy(pm: &PowerModel, f_mhz: f64, active_ms: f64, period_ms: f64) -> Result<f64> {
    if !(f_mhz >= 0.0 && active_ms >= 0.0 && period_ms >= 0.0) {
        return Err(Error::Domain(
            "frequency, active time and period must be >= 0".into(),
        ));
    }
    let ghz = f_mhz / 1000.0;
    let busy = active_ms.min(period_ms);
    let idle = (period_ms - active_ms).max(0.0);
    Ok(((pm.p_static + pm.p_dyn_coeff * ghz * ghz * ghz) * busy + pm.p_idle * idle) / 1000.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Policy {
    Rls,
    Oracle,
    Ondemand,
}

impl Policy {
    pub fn name(self) -> &'static str {
        match self {
            Policy::Rls => "rls",
            Policy::Oracle => "oracle",
            Policy::Ondemand => "ondemand",
        }
    }
}

impl std::str::FromStr for Policy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rls" => Ok(Policy::Rls),
            "oracle" => Ok(Policy::Oracle),
            "ondemand" => Ok(Policy::Ondemand),
            other => Err(Error::Config(format!("unknown policy `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntervalRecord {
    pub k: usize,
    pub freq_mhz: f64,
    /// Realized per-frame time at `freq_mhz`.
    pub frame_time: f64,
    pub energy_j: f64,
    pub violation: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyResult {
    pub policy: Policy,
    pub freq_schedule: Vec<f64>,
    pub total_energy: f64,
    pub fps_violations: usize,
    pub per_interval_log: Vec<IntervalRecord>,
}

impl PolicyResult {
    fn from_log(policy: Policy, log: Vec<IntervalRecord>) -> Self {
        let mut total_energy = 0.0;
        for r in &log {
            total_energy += r.energy_j;
        }
        Self {
            policy,
            freq_schedule: log.iter().map(|r| r.freq_mhz).collect(),
            total_energy,
            fps_violations: log.iter().filter(|r| r.violation).count(),
            per_interval_log: log,
        }
    }

    /// `k,policy,f,t_frame,energy_j,violation` rows followed by a `total`
    /// row carrying the energy sum and violation count.
    pub fn to_table(&self) -> String {
        let mut out = String::from("k,policy,f,t_frame,energy_j,violation\n");
        self.write_rows(&mut out);
        out
    }

    pub fn write_rows(&self, out: &mut String) {
        let name = self.policy.name();
        for r in &self.per_interval_log {
            let _ = writeln!(
                out,
                "{},{name},{},{},{},{}",
                r.k, r.freq_mhz, r.frame_time, r.energy_j, r.violation as u8
            );
        }
        let _ = writeln!(
            out,
            "total,{name},,,{},{}",
            self.total_energy, self.fps_violations
        );
    }
}

/// Frequency minimizing predicted interval energy among those whose
/// predicted frame time meets the budget; the maximum if none does.
pub fn rls_policy_step(
    model: &FrameTimeModel,
    ctx: &PredictionContext,
    table: &FrequencyTable,
    cfg: &GovernorConfig,
    pm: &PowerModel,
) -> Result<f64> {
    let t = ctx.prev_frame_time;
    let mut best: Option<(f64, f64)> = None;
    for &f in table.freqs() {
        let predicted = (t + model.candidate_delta(t, ctx.prev_freq, f)?).max(0.0);
        if predicted > cfg.budget_ms() {
            continue;
        }
        let e = interval_energy(pm, f, cfg.active_ms(predicted), cfg.period_ms)?;
        if best.is_none_or(|(_, be)| e < be) {
            best = Some((f, e));
        }
    }
    Ok(best.map_or(table.max(), |(f, _)| f))
}

/// Utilization-threshold governor: jump to the top above `up_threshold`,
/// one level down below `down_threshold`.
pub fn ondemand_policy_step(
    utilization: f64,
    current_f: f64,
    table: &FrequencyTable,
    cfg: &GovernorConfig,
) -> f64 {
    if utilization > cfg.up_threshold {
        table.max()
    } else if utilization < cfg.down_threshold {
        table
            .level_of(current_f)
            .and_then(|l| table.shifted(l, -1))
            .unwrap_or(current_f)
    } else {
        current_f
    }
}

/// Realized outcome of running interval `k` at `f`.
struct Outcome {
    frame_time: f64,
    energy: f64,
    violation: bool,
}

fn realize(
    spec: &WorkloadSpec,
    c: f64,
    noise: f64,
    f: f64,
    table: &FrequencyTable,
    cfg: &GovernorConfig,
    pm: &PowerModel,
) -> Result<Outcome> {
    let frame_time = oracle_frame_time(spec, c, f)? * noise;
    let violation = frame_time > cfg.budget_ms();
    let (f_run, t_run) = if violation {
        (
            table.max(),
            oracle_frame_time(spec, c, table.max())? * noise,
        )
    } else {
        (f, frame_time)
    };
    Ok(Outcome {
        frame_time,
        energy: interval_energy(pm, f_run, cfg.active_ms(t_run), cfg.period_ms)?,
        violation,
    })
}

/// Cheapest frequency for interval `k` given full knowledge of the frame.
fn oracle_choice(
    spec: &WorkloadSpec,
    c: f64,
    noise: f64,
    table: &FrequencyTable,
    cfg: &GovernorConfig,
    pm: &PowerModel,
) -> Result<f64> {
    let mut best: Option<(f64, f64)> = None;
    for &f in table.freqs() {
        let o = realize(spec, c, noise, f, table, cfg, pm)?;
        if o.violation {
            continue;
        }
        if best.is_none_or(|(_, be)| o.energy < be) {
            best = Some((f, o.energy));
        }
    }
    Ok(best.map_or(table.max(), |(f, _)| f))
}

/// Per-interval Oracle schedule over the workload's complexity schedule.
pub fn oracle_policy(
    spec: &WorkloadSpec,
    table: &FrequencyTable,
    cfg: &GovernorConfig,
    pm: &PowerModel,
    seed: u64,
) -> Result<PolicyResult> {
    simulate(Policy::Oracle, spec, table, cfg, pm, seed)
}

/// Independent counters of the workload, the feature set the RLS policy
/// learns on.
pub fn workload_feature_spec(spec: &WorkloadSpec) -> Result<FeatureSpec> {
    let dep = spec.dep_counters.len();
    FeatureSpec::new(
        (dep..dep + spec.indep_counters.len()).collect(),
        spec.indep_counters.iter().map(|c| c.name.clone()).collect(),
    )
}

pub fn simulate(
    policy: Policy,
    spec: &WorkloadSpec,
    table: &FrequencyTable,
    cfg: &GovernorConfig,
    pm: &PowerModel,
    seed: u64,
) -> Result<PolicyResult> {
    spec.validate()?;
    cfg.validate()?;
    pm.validate()?;
    let schedule = spec.schedule.expand();
    spec.validate_complexities(&schedule)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let features = workload_feature_spec(spec)?;
    let mut model = FrameTimeModel::rls(features.counter_indices.len())?;
    // previous interval: (frequency, frame time, selected counters)
    let mut prev: Option<(f64, f64, Vec<f64>)> = None;
    let mut current_f = table.max();
    let mut log = Vec::with_capacity(schedule.len());

    for (k, &c) in schedule.iter().enumerate() {
        let noise = spec.noise_factor(&mut rng);
        let f = match policy {
            Policy::Oracle => oracle_choice(spec, c, noise, table, cfg, pm)?,
            Policy::Ondemand => current_f,
            Policy::Rls => match &prev {
                Some((pf, pt, _)) if k >= cfg.warmup => {
                    let ctx = PredictionContext {
                        prev_frame_time: *pt,
                        prev_freq: *pf,
                        cur_freq: *pf,
                        counter_deltas: vec![0.0; features.counter_indices.len()],
                    };
                    rls_policy_step(&model, &ctx, table, cfg, pm)?
                }
                _ => table.max(),
            },
        };
        let outcome = realize(spec, c, noise, f, table, cfg, pm)?;
        let counters = oracle_counters_noisy(spec, c, f, &mut rng)?;
        let selected: Vec<f64> = features
            .counter_indices
            .iter()
            .map(|&i| counters[i])
            .collect();

        match policy {
            Policy::Rls => {
                if let Some((pf, pt, px)) = &prev {
                    let ctx = PredictionContext {
                        prev_frame_time: *pt,
                        prev_freq: *pf,
                        cur_freq: f,
                        counter_deltas: selected.iter().zip(px).map(|(a, b)| a - b).collect(),
                    };
                    model.update(&ctx, outcome.frame_time)?;
                }
                model.calibrate(&selected)?;
            }
            Policy::Ondemand => {
                let util = (cfg.active_ms(outcome.frame_time) / cfg.period_ms).min(1.0);
                current_f = ondemand_policy_step(util, f, table, cfg);
            }
            Policy::Oracle => {}
        }
        prev = Some((f, outcome.frame_time, selected));
        log.push(IntervalRecord {
            k,
            freq_mhz: f,
            frame_time: outcome.frame_time,
            energy_j: outcome.energy,
            violation: outcome.violation,
        });
    }
    Ok(PolicyResult::from_log(policy, log))
}
