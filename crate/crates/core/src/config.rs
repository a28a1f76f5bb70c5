//! TOML run configuration shared by the command-line subcommands.

use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::governor::{GovernorConfig, PowerModel};
use crate::trace::{
    generate_characterization, generate_runtime, FrequencyPlan, FrequencyTable, Schedule, Trace,
    WorkloadSpec,
};

/// Full factorial sweep settings.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub complexities: Schedule,
    #[serde(default = "default_repeats")]
    pub repeats: usize,
}

fn default_repeats() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RuntimeConfig {
    pub plan: FrequencyPlan,
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    /// Falls back to the built-in table when absent.
    pub freq_table_mhz: Option<FrequencyTable>,
    pub workload: Option<WorkloadSpec>,
    #[serde(default)]
    pub suite: Vec<WorkloadSpec>,
    pub characterization: Option<SweepConfig>,
    pub runtime: Option<RuntimeConfig>,
    #[serde(default)]
    pub governor: GovernorConfig,
    #[serde(default)]
    pub power: PowerModel,
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Config = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    fn validate(&self) -> Result<()> {
        if self.characterization.is_some() && self.runtime.is_some() {
            return Err(Error::Config(
                "define either [characterization] or [runtime], not both".into(),
            ));
        }
        if let Some(sweep) = &self.characterization {
            if sweep.repeats == 0 {
                return Err(Error::Config("repeats must be >= 1".into()));
            }
        }
        for w in self.workload.iter().chain(&self.suite) {
            w.validate()?;
        }
        self.governor.validate()?;
        self.power.validate()
    }

    pub fn table(&self) -> FrequencyTable {
        self.freq_table_mhz.clone().unwrap_or_default()
    }

    pub fn workload(&self) -> Result<&WorkloadSpec> {
        self.workload
            .as_ref()
            .ok_or_else(|| Error::Config("missing [workload] section".into()))
    }

    /// `[[suite]]` entries, or the single `[workload]` when there is no
    /// suite.
    pub fn workloads(&self) -> Result<Vec<&WorkloadSpec>> {
        if !self.suite.is_empty() {
            return Ok(self.suite.iter().collect());
        }
        Ok(vec![self.workload()?])
    }

    /// Complexity behind each sample of the trace this config generates.
    pub fn sample_complexities(&self) -> Result<Vec<f64>> {
        let workload = self.workload()?;
        match &self.characterization {
            Some(sweep) => {
                let mut cs = sweep.complexities.expand();
                cs.sort_by(f64::total_cmp);
                let per_freq: Vec<f64> = cs
                    .iter()
                    .flat_map(|c| std::iter::repeat_n(*c, sweep.repeats))
                    .collect();
                Ok(per_freq.repeat(self.table().len()))
            }
            None => Ok(workload.schedule.expand()),
        }
    }

    /// Synthesizes the trace described by `[characterization]` or
    /// `[runtime]`.
    pub fn generate(&self, seed: u64) -> Result<Trace> {
        let workload = self.workload()?;
        let table = self.table();
        match (&self.characterization, &self.runtime) {
            (Some(sweep), _) => generate_characterization(
                workload,
                &table,
                &sweep.complexities.expand(),
                sweep.repeats,
                seed,
            ),
            (None, Some(rt)) => generate_runtime(workload, &table, &rt.plan, seed),
            (None, None) => Err(Error::Config(
                "config needs a [characterization] or [runtime] section".into(),
            )),
        }
    }
}
