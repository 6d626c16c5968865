//! Batch experiment driver for the `bellpair` simulators.
//!
//! `bellpair <simulate|chsh|verify|sweep> [flags]`. Exit codes: 0 on success,
//! 1 on configuration or I/O errors, 2 when a verification check fails.

pub mod config;
pub mod output;
pub mod verify;

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use bellpair::analytics::{chsh_with_partitions, estimate_joint_planned, Protocol, RunPlan};
use bellpair::geometry::UnitVector3;
use clap::Parser;
use thiserror::Error;

pub use config::{parse_config, Cli, Command, ConfigError, ExperimentConfig, Grid};
use output::{push_sweep_row, simulate, ChshSummary, SimulateError, SimulationSummary, SWEEP_COLUMNS};

pub const EXIT_OK: u8 = 0;
pub const EXIT_CONFIG: u8 = 1;
pub const EXIT_VERIFY_FAILED: u8 = 2;

pub const RUNS_FILE: &str = "runs.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const CHSH_FILE: &str = "chsh.json";
pub const SWEEP_FILE: &str = "sweep.csv";

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{path}: {source}")]
    File { path: PathBuf, source: io::Error },
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Core(#[from] bellpair::Error),
}

impl From<SimulateError> for CliError {
    fn from(e: SimulateError) -> Self {
        match e {
            SimulateError::Io(e) => CliError::Io(e),
            SimulateError::Core(e) => CliError::Core(e),
        }
    }
}

fn file_err(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::File {
        path: path.to_owned(),
        source,
    }
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>, CliError> {
    fs::create_dir_all(dir).map_err(file_err(dir))?;
    let path = dir.join(name);
    File::create(&path).map(BufWriter::new).map_err(file_err(&path))
}

fn write_json<T: serde::Serialize>(value: &T, out_dir: Option<&Path>, name: &str, stdout: &mut dyn Write) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("summary types serialize");
    text.push('\n');
    if let Some(dir) = out_dir {
        let mut f = create(dir, name)?;
        f.write_all(text.as_bytes())?;
        f.flush()?;
    }
    stdout.write_all(text.as_bytes())?;
    Ok(())
}

/// Runs one command and returns its exit code.
pub fn execute(cfg: &ExperimentConfig, stdout: &mut dyn Write) -> Result<u8, CliError> {
    let out_dir = cfg.out.as_deref();
    match cfg.command {
        Command::Simulate => {
            let est = match out_dir {
                Some(dir) => {
                    let mut csv = create(dir, RUNS_FILE)?;
                    let est = simulate(
                        cfg.protocol,
                        &cfg.a,
                        &cfg.b,
                        cfg.runs,
                        cfg.seed,
                        cfg.partitions,
                        cfg.dump_hidden,
                        Some(&mut csv),
                    )?;
                    csv.flush().map_err(file_err(&dir.join(RUNS_FILE)))?;
                    est
                }
                None => simulate(cfg.protocol, &cfg.a, &cfg.b, cfg.runs, cfg.seed, cfg.partitions, false, None)?,
            };
            write_json(&SimulationSummary::new(&est), out_dir, SUMMARY_FILE, stdout)?;
            Ok(EXIT_OK)
        }
        Command::Chsh => {
            let report = chsh_with_partitions(cfg.source, &cfg.chsh_settings, cfg.runs, cfg.seed, cfg.partitions)?;
            let summary = ChshSummary::new(cfg.source, &cfg.preset, cfg.chsh_settings, cfg.runs, cfg.seed, &report);
            write_json(&summary, out_dir, CHSH_FILE, stdout)?;
            Ok(EXIT_OK)
        }
        Command::Sweep => {
            let text = sweep(cfg.protocol, &cfg.grid, cfg.runs, cfg.seed, cfg.partitions)?;
            match out_dir {
                Some(dir) => {
                    let mut f = create(dir, SWEEP_FILE)?;
                    f.write_all(text.as_bytes())?;
                    f.flush()?;
                }
                None => stdout.write_all(text.as_bytes())?,
            }
            Ok(EXIT_OK)
        }
        Command::Verify => {
            let checks = verify::run_battery(cfg.runs, cfg.seed, cfg.partitions)?;
            stdout.write_all(verify::render_table(&checks).as_bytes())?;
            Ok(if checks.iter().all(|c| c.passed) {
                EXIT_OK
            } else {
                EXIT_VERIFY_FAILED
            })
        }
    }
}

/// Sweep CSV: Alice along ẑ, Bob at `(√(1-d²), 0, d)` so that `a·b = d`.
/// Point `k` uses runs `k·n .. (k+1)·n`.
pub fn sweep(protocol: Protocol, grid: &Grid, runs: u64, seed: u64, partitions: usize) -> Result<String, CliError> {
    let mut text = SWEEP_COLUMNS.join(",");
    text.push('\n');
    let a = UnitVector3::Z;
    for (k, dot) in grid.points().into_iter().enumerate() {
        let b = UnitVector3::new((1.0 - dot * dot).max(0.0).sqrt(), 0.0, dot)?;
        let plan = RunPlan::new(seed, runs)
            .starting_at(k as u64 * runs)
            .with_partitions(partitions);
        let est = estimate_joint_planned(protocol, &a, &b, plan)?;
        push_sweep_row(&mut text, dot, &est);
    }
    Ok(text)
}

/// Parses `args`, runs the command and returns the process exit code.
/// Diagnostics go to `stderr`.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(stderr, "{}", e.render());
                return EXIT_CONFIG;
            }
            let _ = write!(stdout, "{}", e.render());
            return EXIT_OK;
        }
    };
    let file_text = match &cli.flags.config {
        Some(path) => match fs::read_to_string(path) {
            Ok(t) => Some(t),
            Err(e) => {
                let _ = writeln!(stderr, "error: invalid config: {}: {e}", path.display());
                return EXIT_CONFIG;
            }
        },
        None => None,
    };
    let cfg = match parse_config(&cli, file_text.as_deref()) {
        Ok(cfg) => cfg,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            return EXIT_CONFIG;
        }
    };
    match execute(&cfg, stdout) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            EXIT_CONFIG
        }
    }
}

