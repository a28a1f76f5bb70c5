//! Analytic workload oracle.
//!
//! Frame time is split into a frequency-scalable part, measured at a
//! reference frequency and stretched by `ref_freq / f`, and an unscalable
//! part that does not move with the clock. Counters come in two flavours:
//! frequency-dependent ones (cycle counts that grow with the clock) and
//! frequency-independent ones that only see the frame complexity.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{FrequencyTable, Trace, TraceSample, DEFAULT_PERIOD_MS};
use crate::error::{Error, Result};

/// Map from frame complexity to a non-negative quantity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Response {
    Affine {
        slope: f64,
        intercept: f64,
    },
    /// Linear interpolation between `[complexity, value]` knots, extended
    /// linearly past both ends.
    PiecewiseLinear {
        points: Vec<[f64; 2]>,
    },
}

impl Response {
    pub fn affine(slope: f64, intercept: f64) -> Self {
        Response::Affine { slope, intercept }
    }

    pub fn constant(value: f64) -> Self {
        Response::Affine {
            slope: 0.0,
            intercept: value,
        }
    }

    pub fn eval(&self, complexity: f64) -> f64 {
        match self {
            Response::Affine { slope, intercept } => slope * complexity + intercept,
            Response::PiecewiseLinear { points } => {
                let seg = points
                    .windows(2)
                    .position(|w| complexity <= w[1][0])
                    .unwrap_or(points.len() - 2);
                let [x0, y0] = points[seg];
                let [x1, y1] = points[seg + 1];
                y0 + (y1 - y0) * (complexity - x0) / (x1 - x0)
            }
        }
    }

    fn validate(&self, what: &str) -> Result<()> {
        match self {
            Response::Affine { slope, intercept } => {
                if !slope.is_finite() || !intercept.is_finite() {
                    return Err(Error::Config(format!("{what}: non-finite affine response")));
                }
            }
            Response::PiecewiseLinear { points } => {
                if points.len() < 2 {
                    return Err(Error::Config(format!("{what}: need at least two knots")));
                }
                if points.windows(2).any(|w| w[1][0] <= w[0][0]) {
                    return Err(Error::Config(format!(
                        "{what}: knot complexities must be strictly increasing"
                    )));
                }
                if points.iter().flatten().any(|v| !v.is_finite()) {
                    return Err(Error::Config(format!("{what}: non-finite knot")));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DepCounterKind {
    /// Cycles the render engine is busy: noiseless frame time times clock,
    /// times `scale`.
    BusyCycles { scale: f64 },
    /// `response(C) * (f / ref_freq)^exponent`.
    ClockScaled { response: Response, exponent: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepCounter {
    pub name: String,
    #[serde(flatten)]
    pub kind: DepCounterKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndepCounter {
    pub name: String,
    pub response: Response,
    /// Additive Gaussian jitter (counts) applied when sampling noisy traces.
    #[serde(default)]
    pub jitter_sigma: f64,
}

/// Per-interval complexity schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Schedule {
    Explicit {
        values: Vec<f64>,
    },
    Constant {
        value: f64,
        len: usize,
    },
    /// `teeth` ramps from `min` to `max` in increments of `step`.
    Sawtooth {
        min: f64,
        max: f64,
        step: f64,
        teeth: usize,
    },
    Sine {
        mean: f64,
        amplitude: f64,
        period: f64,
        len: usize,
    },
    /// Piecewise-constant `[value, length]` segments.
    Steps {
        segments: Vec<(f64, usize)>,
    },
}

impl Default for Schedule {
    fn default() -> Self {
        Schedule::Explicit { values: Vec::new() }
    }
}

impl Schedule {
    pub fn expand(&self) -> Vec<f64> {
        match self {
            Schedule::Explicit { values } => values.clone(),
            Schedule::Constant { value, len } => vec![*value; *len],
            Schedule::Sawtooth {
                min,
                max,
                step,
                teeth,
            } => {
                let mut tooth = Vec::new();
                let mut c = *min;
                while c <= *max + 1e-9 && *step > 0.0 {
                    tooth.push(c);
                    c += step;
                }
                tooth.repeat(*teeth)
            }
            Schedule::Sine {
                mean,
                amplitude,
                period,
                len,
            } => (0..*len)
                .map(|k| mean + amplitude * (std::f64::consts::TAU * k as f64 / period).sin())
                .collect(),
            Schedule::Steps { segments } => segments
                .iter()
                .flat_map(|(v, n)| std::iter::repeat_n(*v, *n))
                .collect(),
        }
    }
}

fn default_noise_sigma() -> f64 {
    0.03
}

/// Parameters of the synthetic workload.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkloadSpec {
    #[serde(default)]
    pub name: String,
    pub ref_freq_mhz: f64,
    /// Scalable frame time (ms) at `ref_freq_mhz`.
    pub scalable_ms: Response,
    pub unscalable_ms: Response,
    #[serde(default)]
    pub dep_counters: Vec<DepCounter>,
    #[serde(default)]
    pub indep_counters: Vec<IndepCounter>,
    /// Standard deviation of the multiplicative frame-time noise.
    #[serde(default = "default_noise_sigma")]
    pub noise_sigma: f64,
    #[serde(default)]
    pub schedule: Schedule,
}

impl WorkloadSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.ref_freq_mhz > 0.0) {
            return Err(Error::Config("ref_freq_mhz must be > 0".into()));
        }
        if !(self.noise_sigma >= 0.0) {
            return Err(Error::Config("noise_sigma must be >= 0".into()));
        }
        self.scalable_ms.validate("scalable_ms")?;
        self.unscalable_ms.validate("unscalable_ms")?;
        for c in &self.dep_counters {
            match &c.kind {
                DepCounterKind::BusyCycles { scale } if !(*scale > 0.0) => {
                    return Err(Error::Config(format!("{}: scale must be > 0", c.name)));
                }
                DepCounterKind::ClockScaled { response, exponent } => {
                    response.validate(&c.name)?;
                    if !(*exponent > 0.0) {
                        return Err(Error::Config(format!("{}: exponent must be > 0", c.name)));
                    }
                }
                _ => {}
            }
        }
        for c in &self.indep_counters {
            c.response.validate(&c.name)?;
            if !(c.jitter_sigma >= 0.0) {
                return Err(Error::Config(format!(
                    "{}: jitter_sigma must be >= 0",
                    c.name
                )));
            }
        }
        self.validate_complexities(&self.schedule.expand())
    }

    /// Checks that both time components are non-negative at every complexity.
    pub fn validate_complexities(&self, complexities: &[f64]) -> Result<()> {
        for &c in complexities {
            let (s, u) = (self.scalable_ms.eval(c), self.unscalable_ms.eval(c));
            if !(s >= 0.0 && u >= 0.0) {
                return Err(Error::Config(format!(
                    "complexity {c}: scalable {s} ms / unscalable {u} ms must be >= 0"
                )));
            }
        }
        Ok(())
    }

    pub fn counter_names(&self) -> Vec<String> {
        self.dep_counters
            .iter()
            .map(|c| c.name.clone())
            .chain(self.indep_counters.iter().map(|c| c.name.clone()))
            .collect()
    }

    pub fn counter_count(&self) -> usize {
        self.dep_counters.len() + self.indep_counters.len()
    }

    /// Draws the multiplicative noise factor `1 + eps` for one interval.
    pub fn noise_factor<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.noise_sigma == 0.0 {
            return 1.0;
        }
        let eps = Normal::new(0.0, self.noise_sigma)
            .expect("validated sigma")
            .sample(rng);
        (1.0 + eps).max(0.0)
    }
}

fn check_freq(f_mhz: f64) -> Result<()> {
    if !(f_mhz > 0.0) || !f_mhz.is_finite() {
        return Err(Error::Domain(format!("frequency must be > 0, got {f_mhz}")));
    }
    Ok(())
}

/// Noiseless frame time in ms at complexity `c` and frequency `f_mhz`.
pub fn oracle_frame_time(spec: &WorkloadSpec, c: f64, f_mhz: f64) -> Result<f64> {
    check_freq(f_mhz)?;
    Ok(spec.scalable_ms.eval(c) * spec.ref_freq_mhz / f_mhz + spec.unscalable_ms.eval(c))
}

/// Frame time with multiplicative Gaussian noise.
pub fn oracle_frame_time_noisy<R: Rng + ?Sized>(
    spec: &WorkloadSpec,
    c: f64,
    f_mhz: f64,
    rng: &mut R,
) -> Result<f64> {
    Ok(oracle_frame_time(spec, c, f_mhz)? * spec.noise_factor(rng))
}

/// Analytic `d t_F / d f` in ms per MHz.
pub fn oracle_frame_time_derivative(spec: &WorkloadSpec, c: f64, f_mhz: f64) -> Result<f64> {
    check_freq(f_mhz)?;
    Ok(-spec.scalable_ms.eval(c) * spec.ref_freq_mhz / (f_mhz * f_mhz))
}

/// Noiseless counters: dependent counters first, then independent ones.
pub fn oracle_counters(spec: &WorkloadSpec, c: f64, f_mhz: f64) -> Result<Vec<f64>> {
    check_freq(f_mhz)?;
    let mut out = Vec::with_capacity(spec.counter_count());
    for dep in &spec.dep_counters {
        let v = match &dep.kind {
            DepCounterKind::BusyCycles { scale } => {
                oracle_frame_time(spec, c, f_mhz)? * f_mhz * scale
            }
            DepCounterKind::ClockScaled { response, exponent } => {
                response.eval(c) * (f_mhz / spec.ref_freq_mhz).powf(*exponent)
            }
        };
        out.push(v.max(0.0));
    }
    out.extend(
        spec.indep_counters
            .iter()
            .map(|ic| ic.response.eval(c).max(0.0)),
    );
    Ok(out)
}

/// Counters with per-counter jitter added to the independent ones.
pub fn oracle_counters_noisy<R: Rng + ?Sized>(
    spec: &WorkloadSpec,
    c: f64,
    f_mhz: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let mut out = oracle_counters(spec, c, f_mhz)?;
    let offset = spec.dep_counters.len();
    for (i, ic) in spec.indep_counters.iter().enumerate() {
        if ic.jitter_sigma > 0.0 {
            let n = Normal::new(0.0, ic.jitter_sigma).expect("validated sigma");
            out[offset + i] = (out[offset + i] + n.sample(rng)).max(0.0);
        }
    }
    Ok(out)
}

/// Frames that fit in one interval for a vsync-capped 60 FPS application.
pub fn frames_in_interval(frame_time_ms: f64, period_ms: f64) -> u32 {
    let cap = (period_ms * 60.0 / 1000.0).round();
    if frame_time_ms <= 0.0 {
        return cap as u32;
    }
    (period_ms / frame_time_ms).floor().min(cap) as u32
}

/// Full factorial sweep: for each table frequency, each complexity in
/// ascending order, `repeats` consecutive samples.
pub fn generate_characterization(
    spec: &WorkloadSpec,
    table: &FrequencyTable,
    complexities: &[f64],
    repeats: usize,
    seed: u64,
) -> Result<Trace> {
    if complexities.is_empty() {
        return Err(Error::Empty("complexity list".into()));
    }
    if repeats == 0 {
        return Err(Error::Domain("repeats must be >= 1".into()));
    }
    spec.validate_complexities(complexities)?;
    let mut sorted = complexities.to_vec();
    sorted.sort_by(f64::total_cmp);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let period = DEFAULT_PERIOD_MS;
    let mut samples = Vec::with_capacity(table.len() * sorted.len() * repeats);
    for &f in table.freqs() {
        for &c in &sorted {
            for _ in 0..repeats {
                let frame_time = oracle_frame_time_noisy(spec, c, f, &mut rng)?;
                let counters = oracle_counters_noisy(spec, c, f, &mut rng)?;
                samples.push(TraceSample {
                    timestamp: samples.len() as f64 * period / 1000.0,
                    frame_time_ms: frame_time,
                    frame_count: frames_in_interval(frame_time, period),
                    gpu_freq_mhz: f,
                    counters,
                });
            }
        }
    }
    Trace::new(samples, spec.counter_names(), table.clone(), period)
}

/// How the GPU frequency moves in a generated runtime trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FrequencyPlan {
    Constant {
        freq_mhz: f64,
    },
    /// A uniformly drawn table level, redrawn every `hold` intervals.
    Random {
        #[serde(default = "default_hold")]
        hold: usize,
    },
    /// One frequency per interval.
    Explicit {
        values: Vec<f64>,
    },
}

fn default_hold() -> usize {
    1
}

/// Runtime trace: the workload's complexity schedule played at the
/// frequencies given by `plan`.
pub fn generate_runtime(
    spec: &WorkloadSpec,
    table: &FrequencyTable,
    plan: &FrequencyPlan,
    seed: u64,
) -> Result<Trace> {
    spec.validate()?;
    let complexities = spec.schedule.expand();
    spec.validate_complexities(&complexities)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let period = DEFAULT_PERIOD_MS;
    if let FrequencyPlan::Random { hold: 0 } = plan {
        return Err(Error::Config("random plan needs hold >= 1".into()));
    }
    let mut samples = Vec::with_capacity(complexities.len());
    let mut held = table.min();
    for (k, &c) in complexities.iter().enumerate() {
        let f = match plan {
            FrequencyPlan::Constant { freq_mhz } => *freq_mhz,
            FrequencyPlan::Random { hold } => {
                if k % hold == 0 {
                    held = table.freqs()[rng.random_range(0..table.len())];
                }
                held
            }
            FrequencyPlan::Explicit { values } => *values.get(k).ok_or_else(|| {
                Error::Config(format!(
                    "frequency plan has {} entries for {} intervals",
                    values.len(),
                    complexities.len()
                ))
            })?,
        };
        let frame_time = oracle_frame_time_noisy(spec, c, f, &mut rng)?;
        let counters = oracle_counters_noisy(spec, c, f, &mut rng)?;
        samples.push(TraceSample {
            timestamp: k as f64 * period / 1000.0,
            frame_time_ms: frame_time,
            frame_count: frames_in_interval(frame_time, period),
            gpu_freq_mhz: f,
            counters,
        });
    }
    Trace::new(samples, spec.counter_names(), table.clone(), period)
}
