//! Characterization and runtime traces.
//!
//! A trace is a sequence of fixed-period observations. Each row carries the
//! timestamp, the frame time of the interval, the number of frames rendered,
//! the GPU frequency in effect and the raw hardware counter values.

mod oracle;

pub use oracle::{
    frames_in_interval, generate_characterization, generate_runtime, oracle_counters,
    oracle_counters_noisy, oracle_frame_time, oracle_frame_time_derivative,
    oracle_frame_time_noisy, DepCounter, DepCounterKind, FrequencyPlan, IndepCounter, Response,
    Schedule, WorkloadSpec,
};

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, TraceError};

/// Default sampling period in milliseconds.
pub const DEFAULT_PERIOD_MS: f64 = 50.0;

/// The seven Minnowboard GPU frequencies that are known by value.
pub const DEFAULT_FREQS_MHZ: [f64; 7] = [200.0, 311.0, 355.0, 400.0, 444.0, 489.0, 511.0];

/// Ordered list of supported GPU frequencies in MHz.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct FrequencyTable {
    freqs_mhz: Vec<f64>,
}

impl FrequencyTable {
    pub fn new(freqs_mhz: Vec<f64>) -> Result<Self> {
        if freqs_mhz.len() < 2 {
            return Err(Error::FrequencyTable(format!(
                "need at least 2 frequencies, got {}",
                freqs_mhz.len()
            )));
        }
        if freqs_mhz.iter().any(|f| !f.is_finite() || *f <= 0.0) {
            return Err(Error::FrequencyTable(
                "frequencies must be finite and positive".into(),
            ));
        }
        if freqs_mhz.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::FrequencyTable(
                "frequencies must be strictly increasing".into(),
            ));
        }
        Ok(Self { freqs_mhz })
    }

    pub fn freqs(&self) -> &[f64] {
        &self.freqs_mhz
    }

    pub fn len(&self) -> usize {
        self.freqs_mhz.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freqs_mhz.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.freqs_mhz[0]
    }

    pub fn max(&self) -> f64 {
        self.freqs_mhz[self.freqs_mhz.len() - 1]
    }

    pub fn get(&self, level: usize) -> Option<f64> {
        self.freqs_mhz.get(level).copied()
    }

    /// Level index of an exact table member.
    pub fn level_of(&self, freq_mhz: f64) -> Option<usize> {
        self.freqs_mhz.iter().position(|&f| f == freq_mhz)
    }

    pub fn contains(&self, freq_mhz: f64) -> bool {
        self.level_of(freq_mhz).is_some()
    }

    /// Frequency `delta` levels away from `level`, if inside the table.
    pub fn shifted(&self, level: usize, delta: isize) -> Option<f64> {
        let target = level as isize + delta;
        if target < 0 {
            return None;
        }
        self.get(target as usize)
    }

    /// Lower and upper neighbours of an interior member.
    pub fn neighbors(&self, freq_mhz: f64) -> Option<(f64, f64)> {
        let level = self.level_of(freq_mhz)?;
        Some((self.shifted(level, -1)?, self.shifted(level, 1)?))
    }
}

impl Default for FrequencyTable {
    fn default() -> Self {
        Self {
            freqs_mhz: DEFAULT_FREQS_MHZ.to_vec(),
        }
    }
}

impl TryFrom<Vec<f64>> for FrequencyTable {
    type Error = Error;

    fn try_from(value: Vec<f64>) -> Result<Self> {
        Self::new(value)
    }
}

impl From<FrequencyTable> for Vec<f64> {
    fn from(value: FrequencyTable) -> Self {
        value.freqs_mhz
    }
}

/// One sampling interval.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceSample {
    /// Seconds since the start of the trace.
    pub timestamp: f64,
    pub frame_time_ms: f64,
    pub frame_count: u32,
    pub gpu_freq_mhz: f64,
    pub counters: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub samples: Vec<TraceSample>,
    pub counter_names: Vec<String>,
    pub freq_table: FrequencyTable,
    pub period_ms: f64,
}

impl Trace {
    pub fn new(
        samples: Vec<TraceSample>,
        counter_names: Vec<String>,
        freq_table: FrequencyTable,
        period_ms: f64,
    ) -> Result<Self> {
        if !(period_ms > 0.0) {
            return Err(Error::Domain(format!(
                "period must be > 0, got {period_ms}"
            )));
        }
        for (i, s) in samples.iter().enumerate() {
            validate_sample(s, counter_names.len(), &freq_table, i + 1)?;
        }
        Ok(Self {
            samples,
            counter_names,
            freq_table,
            period_ms,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn counter_count(&self) -> usize {
        self.counter_names.len()
    }

    pub fn counter_index(&self, name: &str) -> Option<usize> {
        self.counter_names.iter().position(|n| n == name)
    }
}

fn validate_sample(
    s: &TraceSample,
    counters: usize,
    table: &FrequencyTable,
    row: usize,
) -> std::result::Result<(), TraceError> {
    if s.counters.len() != counters {
        return Err(TraceError::ColumnCount {
            row,
            expected: counters + 4,
            found: s.counters.len() + 4,
        });
    }
    if !s.timestamp.is_finite() {
        return Err(TraceError::InvalidValue {
            row,
            reason: "timestamp is not finite".into(),
        });
    }
    if !(s.frame_time_ms >= 0.0) || !s.frame_time_ms.is_finite() {
        return Err(TraceError::InvalidValue {
            row,
            reason: format!("frame time {} must be finite and >= 0", s.frame_time_ms),
        });
    }
    if let Some(c) = s.counters.iter().find(|c| !(**c >= 0.0) || !c.is_finite()) {
        return Err(TraceError::InvalidValue {
            row,
            reason: format!("counter value {c} must be finite and >= 0"),
        });
    }
    if !table.contains(s.gpu_freq_mhz) {
        return Err(TraceError::UnknownFrequency {
            row,
            freq_mhz: s.gpu_freq_mhz,
        });
    }
    Ok(())
}

const FIXED_COLUMNS: [&str; 4] = ["time", "frame_time_ms", "frame_count", "gpu_freq_mhz"];

/// Parses comma-separated trace text.
///
/// A leading header line (`time,frame_time_ms,frame_count,gpu_freq_mhz,...`)
/// is optional; when present it supplies the counter names. Row numbers in
/// errors are 1-based line numbers of the input.
pub fn parse_trace(text: &str, counter_count: usize, table: &FrequencyTable) -> Result<Trace> {
    let expected = FIXED_COLUMNS.len() + counter_count;
    let mut names: Option<Vec<String>> = None;
    let mut samples = Vec::new();

    for (idx, line) in text.lines().enumerate() {
        let row = idx + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if names.is_none() && samples.is_empty() && fields[0].eq_ignore_ascii_case("time") {
            if fields.len() != expected {
                return Err(TraceError::ColumnCount {
                    row,
                    expected,
                    found: fields.len(),
                }
                .into());
            }
            for (got, want) in fields.iter().zip(FIXED_COLUMNS) {
                if !got.eq_ignore_ascii_case(want) {
                    return Err(TraceError::Header(format!(
                        "expected column `{want}`, found `{got}`"
                    ))
                    .into());
                }
            }
            names = Some(fields[4..].iter().map(|s| s.to_string()).collect());
            continue;
        }
        if fields.len() != expected {
            return Err(TraceError::ColumnCount {
                row,
                expected,
                found: fields.len(),
            }
            .into());
        }
        let num = |column: usize| -> std::result::Result<f64, TraceError> {
            fields[column]
                .parse::<f64>()
                .map_err(|_| TraceError::NonNumeric {
                    row,
                    column: column + 1,
                    value: fields[column].to_string(),
                })
        };
        let frame_count = fields[2]
            .parse::<u32>()
            .map_err(|_| TraceError::NonNumeric {
                row,
                column: 3,
                value: fields[2].to_string(),
            })?;
        let sample = TraceSample {
            timestamp: num(0)?,
            frame_time_ms: num(1)?,
            frame_count,
            gpu_freq_mhz: num(3)?,
            counters: (4..expected)
                .map(num)
                .collect::<std::result::Result<_, _>>()?,
        };
        validate_sample(&sample, counter_count, table, row)?;
        samples.push(sample);
    }

    let counter_names =
        names.unwrap_or_else(|| (1..=counter_count).map(|i| format!("counter{i}")).collect());
    Trace::new(samples, counter_names, table.clone(), DEFAULT_PERIOD_MS)
}

/// Renders a trace in the comma-separated file format, header included.
pub fn serialize_trace(trace: &Trace) -> String {
    let mut out = String::with_capacity(64 * (trace.len() + 1));
    out.push_str(&FIXED_COLUMNS.join(","));
    for name in &trace.counter_names {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    for s in &trace.samples {
        let _ = write!(
            out,
            "{},{},{},{}",
            s.timestamp, s.frame_time_ms, s.frame_count, s.gpu_freq_mhz
        );
        for c in &s.counters {
            let _ = write!(out, ",{c}");
        }
        out.push('\n');
    }
    out
}
