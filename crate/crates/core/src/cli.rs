//! Command-line front end.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::config::Config;
use crate::error::{Error, Result};
use crate::features::{
    run_selection, FeatureSpec, SelectionRule, DEFAULT_FOLDS, DEFAULT_PEARSON_THRESHOLD,
};
use crate::governor::{simulate, Policy, PolicyResult};
use crate::metrics::{compute_metrics, DEFAULT_CONVERGENCE_THRESHOLD};
use crate::replay::{
    replay, replay_table, sensitivity_accuracy, sensitivity_replay, sensitivity_table, ReplayAlgo,
};
use crate::trace::{parse_trace, serialize_trace, FrequencyTable, Trace};

pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Parser)]
#[command(
    name = "frametime",
    version,
    about = "GPU frame-time modeling and DVFS simulation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic trace from a workload config.
    Characterize {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
    },
    /// Prune frequency-dependent counters and pick the rest with Lasso.
    SelectFeatures {
        #[command(flatten)]
        input: TraceInput,
        #[arg(long, default_value = "min_mse")]
        rule: SelectionRule,
        #[arg(long)]
        out: PathBuf,
    },
    /// Stream a trace through an online predictor.
    Replay {
        #[command(flatten)]
        input: TraceInput,
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, default_value = "rls")]
        algo: ReplayAlgo,
        #[arg(long)]
        out: PathBuf,
    },
    /// Frequency sensitivity and multi-level frame-time predictions.
    Sensitivity {
        #[command(flatten)]
        input: TraceInput,
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, default_value_t = 1)]
        jumps: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Closed-loop governor simulation.
    Govern {
        #[arg(long)]
        config: PathBuf,
        /// rls, oracle, ondemand or all.
        #[arg(long, default_value = "all")]
        policy: String,
        /// Closed-loop runs need the analytic workload; a recorded trace is
        /// rejected.
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
    },
}

#[derive(Debug, Args)]
struct TraceInput {
    #[arg(long)]
    trace: PathBuf,
    /// Supplies the frequency table and, for sensitivity, the workload
    /// behind a synthetic trace.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl TraceInput {
    fn load(&self) -> Result<(Trace, Option<Config>)> {
        let config = self.config.as_deref().map(Config::load).transpose()?;
        let table = config.as_ref().map(Config::table).unwrap_or_default();
        Ok((read_trace(&self.trace, &table)?, config))
    }
}

/// Reads a trace file; the counter count comes from the first line.
pub fn read_trace(path: &Path, table: &FrequencyTable) -> Result<Trace> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let first = text
        .lines()
        .find(|l| !l.trim().is_empty())
        .ok_or_else(|| Error::Empty(format!("{} has no rows", path.display())))?;
    let columns = first.split(',').count();
    if columns < 4 {
        return Err(Error::Config(format!(
            "{}: expected at least 4 columns",
            path.display()
        )));
    }
    parse_trace(&text, columns - 4, table)
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn read_spec(path: &Path) -> Result<FeatureSpec> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    FeatureSpec::from_toml(&text)
}

/// Runs the tool and returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                stdout.write_all(text.as_bytes())
            } else {
                stderr.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match execute(cli.command, stdout, stderr) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

fn execute(command: Command, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    match command {
        Command::Characterize { config, out, seed } => {
            let cfg = Config::load(&config)?;
            let trace = cfg.generate(seed)?;
            write_file(&out, &serialize_trace(&trace))?;
            writeln!(stdout, "wrote {} rows to {}", trace.len(), out.display())?;
        }
        Command::SelectFeatures { input, rule, out } => {
            let (trace, _) = input.load()?;
            let outcome = run_selection(&trace, DEFAULT_PEARSON_THRESHOLD, DEFAULT_FOLDS, rule)?;
            for (i, r) in outcome.prune.correlations.iter().enumerate() {
                let verdict = match r {
                    None => "zero variance".to_string(),
                    Some(r) if outcome.prune.kept.contains(&i) => format!("r = {r:.4}, kept"),
                    Some(r) => format!("r = {r:.4}, dropped"),
                };
                writeln!(stdout, "# {}: {verdict}", trace.counter_names[i])?;
            }
            stdout.write_all(outcome.path.to_table().as_bytes())?;
            writeln!(
                stdout,
                "# selected {} features: {:?}",
                outcome.spec.m(),
                outcome.spec.counter_names
            )?;
            write_file(&out, &outcome.spec.to_toml())?;
        }
        Command::Replay {
            input,
            spec,
            algo,
            out,
        } => {
            let (trace, _) = input.load()?;
            let spec = read_spec(&spec)?;
            let rows = replay(&trace, &spec, algo)?;
            write_file(&out, &replay_table(&rows))?;
            let warm: Vec<_> = rows.iter().filter(|r| r.warm).collect();
            let actual: Vec<f64> = warm.iter().map(|r| r.t_actual).collect();
            let predicted: Vec<f64> = warm.iter().map(|r| r.t_pred).collect();
            let report = compute_metrics(
                &actual,
                &predicted,
                DEFAULT_CONVERGENCE_THRESHOLD,
                trace.period_ms,
            )?;
            writeln!(stdout, "rows,{}", report.count)?;
            writeln!(stdout, "mape_pct,{}", report.mape)?;
            writeln!(stdout, "median_ape_pct,{}", report.median_ape)?;
            writeln!(stdout, "nrmse_pct,{}", report.nrmse)?;
            let conv = report
                .convergence_time_ms
                .map(|v| v.to_string())
                .unwrap_or_else(|| "never".into());
            writeln!(stdout, "convergence_ms,{conv}")?;
            writeln!(stdout, "excluded,{}", report.excluded)?;
        }
        Command::Sensitivity {
            input,
            spec,
            jumps,
            out,
        } => {
            let (trace, config) = input.load()?;
            let spec = read_spec(&spec)?;
            let span = trace.freq_table.len() - 1;
            let jumps = if jumps > span {
                writeln!(
                    stderr,
                    "warning: {jumps} jumps exceed the {span}-level table span; clipped to {span}"
                )?;
                span
            } else {
                jumps
            };
            let rows = sensitivity_replay(&trace, &spec, jumps)?;
            write_file(&out, &sensitivity_table(&rows, jumps))?;
            let one_sided = rows.iter().filter(|r| r.one_sided()).count();
            writeln!(stdout, "rows,{}", rows.len())?;
            writeln!(stdout, "one_sided_rows,{one_sided}")?;
            let oracle = config.as_ref().and_then(|c| {
                let w = c.workload().ok()?;
                let cs = c.sample_complexities().ok()?;
                (cs.len() == trace.len()).then_some((w, cs))
            });
            if let Some((workload, complexities)) = oracle {
                let warmup = (trace.len() / 10).min(200);
                let acc = sensitivity_accuracy(&rows, workload, &complexities, warmup)?;
                writeln!(stdout, "derivative_nrmse_pct,{}", acc.derivative_nrmse)?;
                for (j, mape, _) in acc.jump_mape {
                    writeln!(stdout, "jump_{j}_mape_pct,{mape}")?;
                }
            }
        }
        Command::Govern {
            config,
            policy,
            trace,
            out,
            seed,
        } => {
            let policies: Vec<Policy> = match policy.as_str() {
                "all" => vec![Policy::Oracle, Policy::Rls, Policy::Ondemand],
                p => vec![p.parse()?],
            };
            if trace.is_some() {
                return Err(Error::Unsupported(if policies.contains(&Policy::Oracle) {
                    "the oracle policy needs the analytic workload, not a recorded trace".into()
                } else {
                    "closed-loop simulation needs the analytic workload, not a recorded trace"
                        .into()
                }));
            }
            let cfg = Config::load(&config)?;
            let table = cfg.table();
            let workloads = cfg.workloads()?;
            let mut text = String::from("workload,k,policy,f,t_frame,energy_j,violation\n");
            let mut totals = vec![0.0; policies.len()];
            writeln!(stdout, "workload,policy,energy_j,normalized,fps_violations")?;
            for w in &workloads {
                let results: Vec<PolicyResult> = policies
                    .iter()
                    .map(|p| simulate(*p, w, &table, &cfg.governor, &cfg.power, seed))
                    .collect::<Result<_>>()?;
                let oracle = results
                    .iter()
                    .find(|r| r.policy == Policy::Oracle)
                    .map(|r| r.total_energy);
                for (i, r) in results.iter().enumerate() {
                    totals[i] += r.total_energy;
                    let mut rows = String::new();
                    r.write_rows(&mut rows);
                    for line in rows.lines() {
                        let _ = writeln!(text, "{},{line}", w.name);
                    }
                    let norm = oracle
                        .filter(|o| *o > 0.0)
                        .map(|o| (r.total_energy / o).to_string())
                        .unwrap_or_default();
                    writeln!(
                        stdout,
                        "{},{},{},{norm},{}",
                        w.name,
                        r.policy.name(),
                        r.total_energy,
                        r.fps_violations
                    )?;
                }
            }
            if workloads.len() > 1 {
                let n = workloads.len() as f64;
                for (p, t) in policies.iter().zip(&totals) {
                    writeln!(stdout, "suite_mean,{},{},,", p.name(), t / n)?;
                }
            }
            write_file(&out, &text)?;
        }
    }
    Ok(())
}
