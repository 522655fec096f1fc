//! The `hbt` command line.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use hbt_core::Statistics;

use crate::config::RunConfig;
use crate::error::{LabError, Result};
use crate::{demo, events, oracle, pipeline, report};

pub const EVENTS_FILE: &str = "events.txt";
pub const MANIFEST_FILE: &str = "manifest.txt";
pub const CORRELATION_FILE: &str = "correlation.txt";
pub const FIT_FILE: &str = "fit.txt";

#[derive(Debug, Parser)]
#[command(name = "hbt", version, about = "Hanbury Brown–Twiss Monte Carlo laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate shots and write the event file and run manifest.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Worker threads (0: one per core). Overrides run.threads.
        #[arg(long)]
        threads: Option<usize>,
        /// Overrides run.output_dir.
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Histogram an event file, write the g² table and fit.
    Correlate {
        #[arg(long)]
        events: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Print one line of bunched, independent or antibunched positions.
    #[command(name = "demo-box3")]
    DemoBox3 {
        /// b (boson), f (fermion) or d (distinguishable).
        #[arg(long)]
        stats: String,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        seed: u64,
        /// Correlation length, m.
        #[arg(long, default_value_t = 1e-3)]
        length: f64,
    },
    /// Evaluate a closed-form formula.
    Oracle {
        name: String,
        #[arg(allow_hyphen_values = true)]
        args: Vec<String>,
    },
}

fn prepare(config: &Path, threads: Option<usize>, output_dir: Option<PathBuf>) -> Result<RunConfig> {
    let mut cfg = RunConfig::load(config)?;
    if let Some(t) = threads {
        cfg.threads = t;
    }
    if let Some(d) = output_dir {
        cfg.output_dir = d;
    }
    fs::create_dir_all(&cfg.output_dir).map_err(|e| LabError::io(&cfg.output_dir, e))?;
    Ok(cfg)
}

/// Runs the simulate stage: events and manifest in the output directory.
pub fn cmd_simulate(cfg: &RunConfig) -> Result<String> {
    let sim = pipeline::simulate(cfg, cfg.threads)?;
    let path = cfg.output_dir.join(EVENTS_FILE);
    events::write_events(&sim.shots, &path)?;
    let count: usize = sim.shots.iter().map(|s| s.len()).sum();
    let manifest = report::manifest(cfg, &sim.kernel, EVENTS_FILE, count);
    report::write_text(&cfg.output_dir.join(MANIFEST_FILE), &manifest)?;
    Ok(format!("shots={} events={count} file={}", sim.shots.len(), path.display()))
}

/// Runs the correlate stage. The table is written even when the fit fails.
pub fn cmd_correlate(events_path: &Path, cfg: &RunConfig) -> Result<String> {
    let shots = events::read_events(events_path)?;
    let corr = pipeline::correlate(&shots, cfg, cfg.threads)?;
    report::write_text(&cfg.output_dir.join(CORRELATION_FILE), &report::correlation_table(&corr.function))?;
    let fit = pipeline::fit(&corr.function, cfg)?;
    let line = report::fit_line(&fit);
    report::write_text(&cfg.output_dir.join(FIT_FILE), &format!("{line}\n"))?;
    Ok(line)
}

fn parse_stats(s: &str) -> Result<Statistics> {
    match s {
        "b" => Ok(Statistics::Boson),
        "f" => Ok(Statistics::Fermion),
        "d" => Ok(Statistics::Distinguishable),
        other => other
            .parse::<Statistics>()
            .map_err(|_| LabError::Usage(format!("--stats must be b, f or d, got `{other}`"))),
    }
}

fn execute(command: Command) -> Result<String> {
    match command {
        Command::Simulate { config, threads, output_dir } => cmd_simulate(&prepare(&config, threads, output_dir)?),
        Command::Correlate { events, config, threads, output_dir } => {
            cmd_correlate(&events, &prepare(&config, threads, output_dir)?)
        }
        Command::DemoBox3 { stats, n, seed, length } => {
            let s = parse_stats(&stats)?;
            let xs = demo::demo_box3(s, n, length, seed)?;
            Ok(demo::demo_table(s, &xs).trim_end().to_string())
        }
        Command::Oracle { name, args } => oracle::evaluate(&name, &args),
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// exit status, writing results to `out` and diagnostics to `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = if e.use_stderr() { write!(err, "{e}") } else { write!(out, "{e}") };
            return code;
        }
    };
    match execute(cli.command) {
        Ok(text) => {
            let _ = writeln!(out, "{text}");
            0
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
