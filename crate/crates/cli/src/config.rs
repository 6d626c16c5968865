//! Command-line and config-file parsing.
//!
//! Values come from an optional JSON config file (`--config`) and are then
//! overridden by any flag given on the command line. Unknown config keys are
//! rejected.

use std::path::PathBuf;

use bellpair::analytics::{default_partitions, ChshSettings, ChshSource, Protocol};
use bellpair::geometry::UnitVector3;
use clap::{Args, Parser, Subcommand};
use serde::Deserialize;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
#[error("invalid {field}: {message}")]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl ConfigError {
    fn new(field: &str, message: impl Into<String>) -> Self {
        Self {
            field: field.to_owned(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "bellpair", version, about = "Classical simulations of singlet correlations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub flags: Flags,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Simulate runs at one setting pair; write per-run CSV and a JSON summary.
    Simulate,
    /// Evaluate the CHSH expression.
    Chsh,
    /// Run the verification battery and print a pass/fail table.
    Verify,
    /// Sweep a·b over a grid and emit one summary row per point.
    Sweep,
}

#[derive(Debug, Default, Args)]
pub struct Flags {
    /// toner-bacon | two-instance-sampled | two-instance-counted | dh-exact
    #[arg(long, global = true)]
    pub protocol: Option<String>,
    /// Alice's setting as x,y,z (normalized on load)
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub a: Option<String>,
    /// Bob's setting as x,y,z (normalized on load)
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub b: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub runs: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub seed: Option<String>,
    /// Output directory
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// JSON config file; flags override its values
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// CHSH settings preset: optimal | aligned
    #[arg(long, global = true)]
    pub preset: Option<String>,
    /// CHSH correlation source: analytic or a protocol name
    #[arg(long, global = true)]
    pub source: Option<String>,
    /// Sweep grid over a·b as start:stop:count
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub grid: Option<String>,
    /// Include the shared random vectors in the per-run CSV
    #[arg(long, global = true)]
    pub dump_hidden: bool,
    /// Number of contiguous run partitions evaluated in parallel (does not affect output)
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub partitions: Option<String>,
}

/// Contents of a `--config` file.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub protocol: Option<String>,
    pub a: Option<[f64; 3]>,
    pub b: Option<[f64; 3]>,
    pub runs: Option<u64>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub preset: Option<String>,
    pub source: Option<String>,
    pub grid: Option<String>,
    pub dump_hidden: Option<bool>,
    pub partitions: Option<usize>,
    pub chsh: Option<FileChshSettings>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileChshSettings {
    pub a: [f64; 3],
    pub a_prime: [f64; 3],
    pub b: [f64; 3],
    pub b_prime: [f64; 3],
}

/// Grid of `count` evenly spaced values of a·b from `start` to `stop`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl Grid {
    pub fn points(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.start];
        }
        let step = (self.stop - self.start) / (self.count - 1) as f64;
        (0..self.count)
            .map(|k| if k + 1 == self.count { self.stop } else { self.start + step * k as f64 })
            .collect()
    }
}

impl std::str::FromStr for Grid {
    type Err = ConfigError;
    fn from_str(s: &str) -> Result<Self, ConfigError> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || ConfigError::new("grid", format!("expected start:stop:count, got `{s}`"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let start: f64 = parts[0].trim().parse().map_err(|_| bad())?;
        let stop: f64 = parts[1].trim().parse().map_err(|_| bad())?;
        let count: usize = parts[2].trim().parse().map_err(|_| bad())?;
        if count == 0 {
            return Err(ConfigError::new("grid", "count must be at least 1"));
        }
        for v in [start, stop] {
            if !(-1.0..=1.0).contains(&v) {
                return Err(ConfigError::new("grid", format!("a·b value {v} outside [-1, 1]")));
            }
        }
        Ok(Grid { start, stop, count })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub command: Command,
    pub protocol: Protocol,
    pub a: UnitVector3,
    pub b: UnitVector3,
    pub runs: u64,
    pub seed: u64,
    pub out: Option<PathBuf>,
    /// Name of the preset, or `custom` when the settings came from the config file.
    pub preset: String,
    pub chsh_settings: ChshSettings,
    pub source: ChshSource,
    pub grid: Grid,
    pub dump_hidden: bool,
    pub partitions: usize,
}

pub const DEFAULT_RUNS: u64 = 1_000_000;
pub const DEFAULT_GRID: &str = "-1:1:21";

fn parse_vector(field: &str, s: &str) -> Result<UnitVector3, ConfigError> {
    let comps: Vec<f64> = s
        .split(',')
        .map(|c| c.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| ConfigError::new(field, format!("expected x,y,z, got `{s}`")))?;
    let arr: [f64; 3] = comps
        .try_into()
        .map_err(|_| ConfigError::new(field, format!("expected three components, got `{s}`")))?;
    vector_from_array(field, arr)
}

fn vector_from_array(field: &str, arr: [f64; 3]) -> Result<UnitVector3, ConfigError> {
    UnitVector3::from_array(arr).map_err(|e| match e {
        bellpair::Error::ZeroVector => ConfigError::new(field, "zero vector cannot be normalized"),
        other => ConfigError::new(field, other.to_string()),
    })
}

fn preset_settings(name: &str) -> Result<ChshSettings, ConfigError> {
    match name {
        "optimal" => Ok(ChshSettings::optimal()),
        "aligned" => Ok(ChshSettings::aligned()),
        other => Err(ConfigError::new("preset", format!("unknown preset `{other}`"))),
    }
}

fn parse_number<T: std::str::FromStr>(field: &str, s: &str) -> Result<T, ConfigError> {
    s.trim()
        .parse()
        .map_err(|_| ConfigError::new(field, format!("not a valid number: `{s}`")))
}

/// Merges config-file text (if any) with command-line flags.
pub fn parse_config(cli: &Cli, file_text: Option<&str>) -> Result<ExperimentConfig, ConfigError> {
    let file: FileConfig = match file_text {
        Some(text) => serde_json::from_str(text).map_err(|e| {
            let msg = e.to_string();
            // serde reports the offending key in the message, e.g. "unknown field `foo`".
            ConfigError::new("config", msg)
        })?,
        None => FileConfig::default(),
    };
    let f = &cli.flags;

    let protocol_name = f
        .protocol
        .clone()
        .or(file.protocol)
        .unwrap_or_else(|| Protocol::TwoInstanceSampled.as_str().to_owned());
    let protocol: Protocol = protocol_name
        .parse()
        .map_err(|_| ConfigError::new("protocol", format!("unknown protocol `{protocol_name}`")))?;

    let a = match (&f.a, file.a) {
        (Some(s), _) => parse_vector("a", s)?,
        (None, Some(arr)) => vector_from_array("a", arr)?,
        (None, None) => UnitVector3::Z,
    };
    let b = match (&f.b, file.b) {
        (Some(s), _) => parse_vector("b", s)?,
        (None, Some(arr)) => vector_from_array("b", arr)?,
        (None, None) => UnitVector3::X,
    };

    let runs = match &f.runs {
        Some(s) => parse_number("runs", s)?,
        None => file.runs.unwrap_or(DEFAULT_RUNS),
    };
    if runs < 1 {
        return Err(ConfigError::new("runs", "must be at least 1"));
    }
    let seed = match &f.seed {
        Some(s) => parse_number("seed", s)?,
        None => file.seed.unwrap_or(0),
    };
    let partitions = match &f.partitions {
        Some(s) => parse_number("partitions", s)?,
        None => file.partitions.unwrap_or_else(default_partitions),
    };
    if partitions < 1 {
        return Err(ConfigError::new("partitions", "must be at least 1"));
    }

    let (preset, chsh_settings) = match (&f.preset, file.preset, file.chsh) {
        (Some(p), _, _) => (p.clone(), preset_settings(p)?),
        (None, Some(p), _) => (p.clone(), preset_settings(&p)?),
        (None, None, Some(s)) => (
            "custom".to_owned(),
            ChshSettings {
                a: vector_from_array("chsh.a", s.a)?,
                a_prime: vector_from_array("chsh.a_prime", s.a_prime)?,
                b: vector_from_array("chsh.b", s.b)?,
                b_prime: vector_from_array("chsh.b_prime", s.b_prime)?,
            },
        ),
        (None, None, None) => ("optimal".to_owned(), ChshSettings::optimal()),
    };

    let source_name = f
        .source
        .clone()
        .or(file.source)
        .unwrap_or_else(|| "analytic".to_owned());
    let source: ChshSource = source_name
        .parse()
        .map_err(|_| ConfigError::new("source", format!("unknown source `{source_name}`")))?;

    let grid: Grid = f
        .grid
        .clone()
        .or(file.grid)
        .unwrap_or_else(|| DEFAULT_GRID.to_owned())
        .parse()?;

    Ok(ExperimentConfig {
        command: cli.command,
        protocol,
        a,
        b,
        runs,
        seed,
        out: f.out.clone().or(file.out),
        preset,
        chsh_settings,
        source,
        grid,
        dump_hidden: f.dump_hidden || file.dump_hidden.unwrap_or(false),
        partitions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cli(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("bellpair").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn flags_only() {
        let c = cli(&[
            "simulate", "--protocol", "two-instance-sampled", "--a", "0,0,1", "--b", "1,0,0", "--runs",
            "1000000", "--seed", "42",
        ]);
        let cfg = parse_config(&c, None).unwrap();
        assert_eq!(cfg.protocol, Protocol::TwoInstanceSampled);
        assert_eq!(cfg.a, UnitVector3::Z);
        assert_eq!(cfg.b, UnitVector3::X);
        assert_eq!(cfg.runs, 1_000_000);
        assert_eq!(cfg.seed, 42);
    }

    #[test]
    fn zero_vector_named() {
        let err = parse_config(&cli(&["simulate", "--a", "0,0,0"]), None).unwrap_err();
        assert_eq!(err.field, "a");
        assert!(err.to_string().contains("zero vector"));
    }

    #[test]
    fn negative_components_accepted() {
        let cfg = parse_config(&cli(&["simulate", "--b", "-1,0,0"]), None).unwrap();
        assert_eq!(cfg.b, -UnitVector3::X);
    }

    #[test]
    fn flag_overrides_file() {
        let cfg = parse_config(&cli(&["simulate", "--runs", "20"]), Some(r#"{"runs": 10, "seed": 3}"#)).unwrap();
        assert_eq!(cfg.runs, 20);
        assert_eq!(cfg.seed, 3);
    }

    #[test]
    fn unknown_key_rejected() {
        let err = parse_config(&cli(&["simulate"]), Some(r#"{"rnus": 10}"#)).unwrap_err();
        assert!(err.message.contains("rnus"), "{err}");
    }

    #[test]
    fn malformed_json_rejected() {
        let err = parse_config(&cli(&["simulate"]), Some("{runs: ")).unwrap_err();
        assert_eq!(err.field, "config");
    }

    #[test]
    fn bad_protocol_and_runs() {
        let err = parse_config(&cli(&["simulate", "--protocol", "bogus"]), None).unwrap_err();
        assert_eq!(err.field, "protocol");
        let err = parse_config(&cli(&["simulate", "--runs", "0"]), None).unwrap_err();
        assert_eq!(err.field, "runs");
        let err = parse_config(&cli(&["simulate", "--runs", "-5"]), None).unwrap_err();
        assert_eq!(err.field, "runs");
    }

    #[test]
    fn custom_chsh_settings_from_file() {
        let text = r#"{"chsh": {"a": [0,0,1], "a_prime": [1,0,0], "b": [0,0,1], "b_prime": [1,0,0]}}"#;
        let cfg = parse_config(&cli(&["chsh"]), Some(text)).unwrap();
        assert_eq!(cfg.preset, "custom");
        assert_eq!(cfg.chsh_settings.b_prime, UnitVector3::X);
    }

    #[test]
    fn grid_parsing() {
        let g: Grid = "-1:1:5".parse().unwrap();
        assert_eq!(g.points(), vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
        assert!("0:2:3".parse::<Grid>().is_err());
        assert!("0:1".parse::<Grid>().is_err());
        assert!("0:1:0".parse::<Grid>().is_err());
    }
}
