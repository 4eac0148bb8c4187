mod commands;
mod config;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

/// Compressed memory tier simulator.
#[derive(Debug, Parser)]
#[command(name = "ntier", version)]
pub struct Cli {
    /// Experiment config (TOML), or `preset:NAME` for a bundled one.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the experiment seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output file or directory, depending on the command.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Measures ratio and latency of every configured tier.
    Characterize {
        #[arg(long, default_value_t = 1000)]
        pages: usize,
        #[arg(long, default_value_t = 3)]
        passes: usize,
    },
    /// Writes the configured workload as a CSV trace.
    GenTrace,
    /// Runs one experiment and writes summary.json and windows.csv.
    Simulate {
        /// Calibration CSV; the bundled table when omitted.
        #[arg(long)]
        calibration: Option<PathBuf>,
        /// Replay this CSV trace instead of generating the workload.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Runs several experiments on the same workload and tabulates them.
    Compare {
        /// Config paths or `preset:NAME`.
        #[arg(required = true)]
        configs: Vec<PathBuf>,
        #[arg(long)]
        calibration: Option<PathBuf>,
    },
    /// Ranks tiers by a weighted score over ratio, latency and cost.
    ScoreTiers {
        #[arg(long)]
        calibration: Option<PathBuf>,
        /// Compressibility, latency and cost weights, e.g. `0.5,0.3,0.2`.
        #[arg(long)]
        weights: String,
    },
    /// Prints a readable report from a summary.json.
    Report { summary: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Usage,
    Config,
    Io,
    Run,
}

impl ErrorKind {
    fn name(self) -> &'static str {
        match self {
            ErrorKind::Usage => "usage",
            ErrorKind::Config => "config",
            ErrorKind::Io => "io",
            ErrorKind::Run => "run",
        }
    }

    fn exit_code(self) -> u8 {
        match self {
            ErrorKind::Usage | ErrorKind::Config => 2,
            ErrorKind::Io | ErrorKind::Run => 1,
        }
    }
}

#[derive(Debug)]
pub struct CliError {
    pub kind: ErrorKind,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            kind: ErrorKind::Usage,
            message: message.into(),
        }
    }

    pub fn config(message: impl Into<String>) -> Self {
        Self {
            kind: ErrorKind::Config,
            message: message.into(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

fn classify(err: &anyhow::Error) -> (ErrorKind, String) {
    if let Some(e) = err.downcast_ref::<CliError>() {
        return (e.kind, e.message.clone());
    }
    let kind = if err.chain().any(|c| c.is::<std::io::Error>()) {
        ErrorKind::Io
    } else if let Some(ntier::Error::Config(_)) = err.downcast_ref::<ntier::Error>() {
        ErrorKind::Config
    } else {
        ErrorKind::Run
    };
    (kind, format!("{err:#}"))
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("invalid arguments");
            let msg = first.strip_prefix("error: ").unwrap_or(first);
            eprintln!("error[usage]: {}", one_line(msg));
            return ExitCode::from(2);
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let (kind, msg) = classify(&err);
            eprintln!("error[{}]: {}", kind.name(), one_line(&msg));
            ExitCode::from(kind.exit_code())
        }
    }
}
