//! The `wboot` experiment runner.
//!
//! Each subcommand resolves its settings (built-in defaults, then an
//! optional TOML config file, then command-line flags), runs one study and
//! writes its result tables plus a `<out>.manifest.json` describing the run.

pub mod commands;
pub mod config;
pub mod output;

use std::ffi::OsString;
use std::path::PathBuf;

use chrono::{SecondsFormat, Utc};
use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::exec::with_threads;

pub use config::{Command, ExperimentConfig, Format, Settings};
pub use output::{Outcome, RunManifest, Table};

/// Environment variable read when neither `--threads` nor the config sets a
/// thread count.
pub const THREADS_ENV: &str = "BOOT_T_THREADS";

#[derive(Debug, Parser)]
#[command(name = "wboot", version, about = "Weighted-bootstrap t-statistic experiments")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Debug, Subcommand)]
enum Sub {
    /// Weight-moment oracles and the M_n decay study.
    WeightsCheck(Flags),
    /// Conditional CLT study, on the weights or on the data.
    Clt(Flags),
    /// Lindeberg probes and variance-ratio deviations for one weight draw.
    Negligibility(Flags),
    /// Bootstrap-t bound for a CSV dataset, or a coverage run for a generator.
    Interval(Flags),
    /// Relative error of S*^2 against S_n^2 for a fixed sample as m grows.
    FixedN(Flags),
    /// Coverage of T_n <= C for one or more bound kinds.
    Coverage(Flags),
}

#[derive(Debug, Args, Default)]
struct Flags {
    /// TOML config; a table named after the subcommand overrides top-level keys.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads [env: BOOT_T_THREADS]. Has no effect on results.
    #[arg(long)]
    threads: Option<usize>,
    /// Primary result file; secondary tables go next to it.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    #[arg(long, value_name = "csv|json")]
    format: Option<Format>,
    /// efron, gamma, gamma:SHAPE,RATE, exp:RATE or const:C.
    #[arg(long)]
    scheme: Option<String>,
    /// fixed:M, ratio:C, nlogn:C or sqrt-cap.
    #[arg(long = "m-rule")]
    m_rule: Option<String>,
    /// normal[:MU,SD], exp-centered[:RATE], t:NU, two-point:LO,HI,P or csv:PATH.
    #[arg(long)]
    generator: Option<String>,
    /// The CSV dataset starts with a header row.
    #[arg(long = "csv-header", num_args = 0..=1, default_missing_value = "true")]
    csv_header: Option<bool>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long = "n-grid", value_delimiter = ',')]
    n_grid: Option<Vec<usize>>,
    #[arg(long = "m-grid", value_delimiter = ',')]
    m_grid: Option<Vec<u64>>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long = "inner-reps")]
    inner_reps: Option<usize>,
    #[arg(long = "outer-reps")]
    outer_reps: Option<usize>,
    /// Bootstrap replicates per bound.
    #[arg(long = "B", alias = "b")]
    b: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Comma-separated epsilon grid for the Lindeberg probe.
    #[arg(long, value_delimiter = ',')]
    epsilon: Option<Vec<f64>>,
    /// t_star, t_star_star, t_star_star_sn or t_n.
    #[arg(long)]
    statistic: Option<String>,
    /// on-weights or on-data.
    #[arg(long)]
    paradigm: Option<String>,
    /// Probe normalizer: t_star or t_star_star.
    #[arg(long)]
    mode: Option<String>,
    /// Bound kinds 1-4, comma-separated.
    #[arg(long, value_delimiter = ',')]
    kind: Option<Vec<u8>>,
    /// KS threshold for the clt summary.
    #[arg(long)]
    threshold: Option<f64>,
    /// Also emit the two-sided interval from the (1-alpha)/2 and (1+alpha)/2 bounds.
    #[arg(long = "two-sided", num_args = 0..=1, default_missing_value = "true")]
    two_sided: Option<bool>,
}

impl Flags {
    fn into_settings(self) -> (Option<PathBuf>, Settings) {
        let s = Settings {
            seed: self.seed,
            threads: self.threads,
            out: self.out,
            format: self.format,
            scheme: self.scheme,
            m_rule: self.m_rule,
            generator: self.generator,
            csv_header: self.csv_header,
            n: self.n,
            n_grid: self.n_grid,
            m_grid: self.m_grid,
            reps: self.reps,
            inner_reps: self.inner_reps,
            outer_reps: self.outer_reps,
            b: self.b,
            alpha: self.alpha,
            epsilon: self.epsilon,
            statistic: self.statistic,
            paradigm: self.paradigm,
            mode: self.mode,
            kind: self.kind,
            threshold: self.threshold,
            two_sided: self.two_sided,
        };
        (self.config, s)
    }
}

fn env_threads() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Ok(v) if !v.trim().is_empty() => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Error::config("threads", format!("{THREADS_ENV}=`{v}` is not a thread count"))),
        _ => Ok(None),
    }
}

fn now() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}

/// Runs a resolved experiment and writes its result files and manifest.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunManifest> {
    let threads = match cfg.settings.threads {
        Some(t) => Some(t),
        None => env_threads()?,
    };
    let started_at = now();
    let outcome = with_threads(threads, || commands::dispatch(cfg))??;
    let paths = output::write_results(cfg, &outcome)?;
    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        command: cfg.command.to_string(),
        seed: cfg.seed(),
        threads,
        started_at,
        finished_at: now(),
        config: cfg.to_toml()?,
        outputs: paths.iter().map(|p| p.display().to_string()).collect(),
        degenerate_counts: outcome.degenerate_counts,
        notes: outcome.notes,
    };
    output::write_manifest(cfg, &manifest)?;
    Ok(manifest)
}

fn execute(cli: Cli) -> Result<()> {
    let (cmd, flags) = match cli.command {
        Sub::WeightsCheck(f) => (Command::WeightsCheck, f),
        Sub::Clt(f) => (Command::Clt, f),
        Sub::Negligibility(f) => (Command::Negligibility, f),
        Sub::Interval(f) => (Command::Interval, f),
        Sub::FixedN(f) => (Command::FixedN, f),
        Sub::Coverage(f) => (Command::Coverage, f),
    };
    let (config_path, flags) = flags.into_settings();
    let file = config_path.map(|p| config::read_config_file(&p, cmd)).transpose()?;
    let cfg = ExperimentConfig::resolve(cmd, file, flags)?;
    let manifest = run_experiment(&cfg)?;
    for p in &manifest.outputs {
        println!("{p}");
    }
    for note in &manifest.notes {
        eprintln!("note: {note}");
    }
    Ok(())
}

/// Parses `args` (program name first), runs, and returns the exit code:
/// 0 success, 2 config error, 3 experiment degeneracy, 4 I/O error.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("wboot: {e}");
            e.exit_code()
        }
    }
}
