//! Command-line front end: JSON experiment configs in, JSON reports or CSV
//! tables out.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::Parser;
use scale_iter::engines::IterationReport;

mod commands;
pub mod config;

pub use commands::{run, validate, CliReport, Outcome, CLI_REPORT_SCHEMA};
pub use config::{Command, ExperimentConfig, Format, Params};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(String),
    #[error(transparent)]
    Core(#[from] scale_iter::Error),
    #[error("invalid config:\n  {}", .0.join("\n  "))]
    Invalid(Vec<String>),
}

/// Exit status for a finished run.
pub const EXIT_OK: u8 = 0;
/// Exit status for config, IO and precondition errors.
pub const EXIT_ERROR: u8 = 1;
/// Exit status when the run completed but its verdict failed.
pub const EXIT_VERDICT: u8 = 2;

#[derive(Debug, Parser)]
#[command(name = "scale-iter", version, about = "Run scale-iteration experiments")]
pub struct Cli {
    pub command: Command,
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the config's output path; stdout when neither is set.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Overrides the config's output format.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Overrides the config's seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

/// Renders an iteration report: the fixed columns
/// `n,s_n,step_norm,residual,bound,flag` followed by the engine's extra
/// columns in name order, or the full report as JSON.
pub fn emit_table(report: &IterationReport, format: Format) -> Result<String, CliError> {
    match format {
        Format::Csv => {
            let mut buf = Vec::new();
            report.write_csv(&mut buf)?;
            String::from_utf8(buf).map_err(|e| CliError::Io(e.to_string()))
        }
        Format::Json => Ok(report.to_json_string()),
    }
}

/// Renders a finished run in `format`.
pub fn render(outcome: &Outcome, format: Format) -> Result<String, CliError> {
    match format {
        Format::Csv => Ok(outcome.csv.clone()),
        Format::Json => serde_json::to_string_pretty(&outcome.report)
            .map(|s| s + "\n")
            .map_err(|e| CliError::Io(e.to_string())),
    }
}

fn execute(cli: &Cli) -> Result<bool, CliError> {
    let text = std::fs::read_to_string(&cli.config)
        .map_err(|e| CliError::Io(format!("{}: {e}", cli.config.display())))?;
    let mut config = ExperimentConfig::from_json_str(&text)?;
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    let outcome = run(&config, cli.command)?;
    let format = cli.format.or(config.output.format).unwrap_or_default();
    let body = render(&outcome, format)?;
    match cli.out.as_ref().or(config.output.path.as_ref()) {
        Some(path) => std::fs::write(path, body).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?,
        None => std::io::stdout()
            .write_all(body.as_bytes())
            .map_err(|e| CliError::Io(e.to_string()))?,
    }
    eprintln!("{}: {}", cli.command.name(), outcome.report.summary);
    Ok(outcome.report.ok)
}

/// Parses `args` (program name first), runs and returns the exit status.
pub fn main_with_args<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok(true) => EXIT_OK,
        Ok(false) => EXIT_VERDICT,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}
