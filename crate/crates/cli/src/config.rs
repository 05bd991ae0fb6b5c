use std::path::PathBuf;

use clap::{Parser, ValueEnum};
use ordered_cif::{BandCenter, BandWeight, Transform};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Unrestricted and order-restricted cause-1 CIFs per group.
    Estimate,
    /// Sequential ordered test of equal cause-1 CIFs.
    Test,
    /// Simultaneous confidence bands.
    Band,
    /// Monte Carlo study from a scenario file.
    Simulate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Analytic p-value for uncensored data, resampling otherwise.
    Auto,
    Analytic,
    Resampled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TransformArg {
    Identity,
    Log,
    Cloglog,
    Logit,
}

impl From<TransformArg> for Transform {
    fn from(t: TransformArg) -> Self {
        match t {
            TransformArg::Identity => Transform::Identity,
            TransformArg::Log => Transform::Log,
            TransformArg::Cloglog => Transform::Cloglog,
            TransformArg::Logit => Transform::Logit,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum WeightArg {
    Unit,
    InverseSd,
}

impl From<WeightArg> for BandWeight {
    fn from(w: WeightArg) -> Self {
        match w {
            WeightArg::Unit => BandWeight::Unit,
            WeightArg::InverseSd => BandWeight::InverseSd,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CenterArg {
    Unrestricted,
    Restricted,
}

impl From<CenterArg> for BandCenter {
    fn from(c: CenterArg) -> Self {
        match c {
            CenterArg::Unrestricted => BandCenter::Unrestricted,
            CenterArg::Restricted => BandCenter::Restricted,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "ordered-cif", version, about = "Order-restricted inference for cumulative incidence functions")]
pub struct Cli {
    #[arg(value_enum)]
    pub command: Command,

    /// CSV file with a `group,time,cause` header.
    #[arg(long)]
    pub input: Option<PathBuf>,

    /// Hypothesised order, lowest CIF first: `--groups g1,g2,...`.
    #[arg(long, value_delimiter = ',')]
    pub groups: Vec<String>,

    /// Scenario file (JSON, or TOML by extension) for `simulate`.
    #[arg(long)]
    pub config: Option<PathBuf>,

    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,

    /// Multiplier replicates.
    #[arg(long, default_value_t = 1000)]
    pub reps: usize,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Upper end of the analysis window; defaults to the smallest per-group
    /// largest observed time.
    #[arg(long)]
    pub horizon: Option<f64>,

    #[arg(long, value_enum, default_value_t = Method::Auto)]
    pub method: Method,

    #[arg(long, value_enum, default_value_t = TransformArg::Identity)]
    pub transform: TransformArg,

    #[arg(long, value_enum, default_value_t = WeightArg::Unit)]
    pub weight: WeightArg,

    #[arg(long, value_enum, default_value_t = CenterArg::Unrestricted)]
    pub center: CenterArg,

    /// Band interval `t1,t2`.
    #[arg(long, value_delimiter = ',', num_args = 2)]
    pub interval: Option<Vec<f64>>,

    /// Only band this group (default: every group).
    #[arg(long)]
    pub band_group: Option<String>,

    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,

    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

/// The fully resolved configuration echoed into every output.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub command: Command,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub groups: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config: Option<String>,
    pub alpha: f64,
    #[serde(rename = "B")]
    pub reps: usize,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    pub method: Method,
    pub transform: Transform,
    pub weight: BandWeight,
    pub center: BandCenter,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub interval: Option<(f64, f64)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub band_group: Option<String>,
    pub format: Format,
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

impl RunConfig {
    /// Checks the flags each command needs; `Err` carries a usage message.
    pub fn resolve(cli: &Cli) -> Result<Self, String> {
        let needs_data = matches!(cli.command, Command::Estimate | Command::Test | Command::Band);
        if needs_data {
            if cli.input.is_none() {
                return Err("--input is required for this command".into());
            }
            if cli.groups.len() < 2 {
                return Err("--groups must list at least two groups in hypothesised order".into());
            }
        }
        if cli.command == Command::Simulate && cli.config.is_none() {
            return Err("--config is required for simulate".into());
        }
        if !(cli.alpha > 0.0 && cli.alpha < 1.0) {
            return Err(format!("--alpha must lie in (0, 1), got {}", cli.alpha));
        }
        let resamples = match cli.command {
            Command::Band => true,
            Command::Test => cli.method == Method::Resampled || cli.method == Method::Auto,
            _ => false,
        };
        if resamples && cli.reps < 100 {
            return Err(format!("--reps must be at least 100, got {}", cli.reps));
        }
        let interval = match cli.interval.as_deref() {
            None => None,
            Some([a, b]) => Some((*a, *b)),
            Some(_) => return Err("--interval takes exactly two values".into()),
        };
        Ok(Self {
            command: cli.command,
            input: cli.input.as_ref().map(|p| p.display().to_string()),
            groups: cli.groups.clone(),
            config: cli.config.as_ref().map(|p| p.display().to_string()),
            alpha: cli.alpha,
            reps: cli.reps,
            seed: cli.seed,
            horizon: cli.horizon,
            method: cli.method,
            transform: cli.transform.into(),
            weight: cli.weight.into(),
            center: cli.center.into(),
            interval,
            band_group: cli.band_group.clone(),
            format: cli.format,
            out: cli.out.clone(),
        })
    }
}
