//! `navcbn`: synthesize, featurize, fit, evaluate, tune, predict, search
//! counterfactuals, realize them and export clusters.
//!
//! Every subcommand prints one JSON document on stdout and logs to stderr.
//! Exit codes: 0 success, 2 usage error, 3 data or schema error,
//! 4 counterfactual search exhausted.

mod commands;
mod config;

use std::fmt;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use navcbn_core::evaluation::F1Mode;
use navcbn_core::features::TotalRotationMode;
use navcbn_core::variables::{Cardinalities, Target};

use config::PipelineConfig;

/// Invalid flags or configuration.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub const EXIT_USAGE: u8 = 2;
pub const EXIT_DATA: u8 = 3;
pub const EXIT_NO_SOLUTION: u8 = 4;

#[derive(Parser, Debug)]
#[command(name = "navcbn", version, about = "Perceived-competence modeling for robot guidance")]
pub struct Cli {
    /// TOML file with pipeline settings; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for every random choice.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Run folds and shards on the current thread only.
    #[arg(long, global = true)]
    sequential: bool,
    /// Increase log detail on stderr (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
pub struct ModelArgs {
    /// Interval counts `initial,total,pos,rot[,human]`.
    #[arg(long)]
    cardinalities: Option<Cardinalities>,
    /// Additive CPT smoothing.
    #[arg(long)]
    alpha: Option<f64>,
    /// `as_written` or `path_length`.
    #[arg(long)]
    total_rotation_mode: Option<TotalRotationMode>,
    /// Resample input windows to nine steps by linear interpolation.
    #[arg(long)]
    resample: bool,
}

#[derive(Args, Debug, Default)]
pub struct SearchArgs {
    /// Success threshold on P(high).
    #[arg(long)]
    epsilon: Option<f64>,
    /// Minimum observation count, exclusive.
    #[arg(long)]
    min_count: Option<u64>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a synthetic dataset as JSONL.
    Synth(commands::SynthArgs),
    /// Compute trajectory features from a JSONL dataset.
    Featurize {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// `csv` or `jsonl`.
        #[arg(long, default_value = "csv")]
        format: commands::FeatureFormat,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Fit discretization and network parameters; writes a model bundle.
    Fit {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Leave-one-participant-out cross-validation at fixed interval counts.
    Evaluate {
        #[arg(long)]
        input: Option<PathBuf>,
        /// Also print a metrics table on stderr.
        #[arg(long)]
        table: bool,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        f1_mode: Option<F1Mode>,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Nested cross-validated selection of interval counts.
    Tune {
        #[arg(long)]
        input: Option<PathBuf>,
        /// Also print a metrics table on stderr.
        #[arg(long)]
        table: bool,
        #[arg(long)]
        out: Option<PathBuf>,
        /// `;`-separated interval-count settings.
        #[arg(long)]
        grid: Option<String>,
        #[arg(long)]
        f1_mode: Option<F1Mode>,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Predict both targets for every window of a dataset.
    Predict {
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        resample: bool,
    },
    /// Minimal-change search toward a high rating.
    Counterfactual {
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long, default_value = "competence")]
        target: Target,
        /// Parent indices of the target in graph order.
        #[arg(long, conflicts_with = "scenario")]
        start: Option<String>,
        /// Dataset holding the scenario given by `--scenario`.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, requires = "input")]
        scenario: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Turn a counterfactual solution into world-frame poses.
    Realize {
        #[arg(long)]
        model: Option<PathBuf>,
        /// Output of `counterfactual`.
        #[arg(long)]
        solution: PathBuf,
        /// Start pose `x,y,heading`.
        #[arg(long, default_value = "0,0,0")]
        start_pose: String,
        /// Goal `x,y` in the world frame.
        #[arg(long)]
        goal: String,
        /// Also write `t,x,y,heading` rows here.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Write cluster centroids of the time-series variables as CSV.
    ExportClusters {
        #[arg(long)]
        model: Option<PathBuf>,
        /// One variable; all time-series variables when omitted.
        #[arg(long)]
        variable: Option<String>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

impl ModelArgs {
    fn apply(&self, cfg: &mut PipelineConfig) {
        if let Some(c) = self.cardinalities {
            cfg.cardinalities = c.to_string();
        }
        if let Some(a) = self.alpha {
            cfg.alpha = a;
        }
        if let Some(m) = self.total_rotation_mode {
            cfg.total_rotation_mode = m;
        }
    }
}

impl SearchArgs {
    fn apply(&self, cfg: &mut PipelineConfig) {
        if let Some(e) = self.epsilon {
            cfg.epsilon = e;
        }
        if let Some(m) = self.min_count {
            cfg.min_count = m;
        }
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<UsageError>().is_some() {
        EXIT_USAGE
    } else if err.downcast_ref::<navcbn_core::Error>().is_some() {
        EXIT_DATA
    } else {
        1
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).parse_default_env().init();
    match commands::run(cli) {
        Ok(outcome) => {
            let mut stdout = std::io::stdout().lock();
            match writeln!(stdout, "{}", outcome.document) {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => {
                    eprintln!("error: writing stdout: {e}");
                    ExitCode::FAILURE
                }
                _ => ExitCode::from(outcome.exit),
            }
        }
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
