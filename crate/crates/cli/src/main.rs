mod commands;
mod config;

use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fwdvol::pricer::SweepKind;

/// Output format version for every JSON document the tool prints.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug)]
pub struct CliError {
    kind: ErrorKind,
    message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ErrorKind {
    Validation,
    Numerical,
}

impl CliError {
    pub fn validation(message: impl Into<String>) -> Self {
        Self { kind: ErrorKind::Validation, message: message.into() }
    }

    pub fn numerical(message: impl Into<String>) -> Self {
        Self { kind: ErrorKind::Numerical, message: message.into() }
    }

    pub fn code(&self) -> u8 {
        match self.kind {
            ErrorKind::Validation => 2,
            ErrorKind::Numerical => 3,
        }
    }
}

impl From<fwdvol::Error> for CliError {
    fn from(e: fwdvol::Error) -> Self {
        if e.is_validation() {
            Self::validation(e.to_string())
        } else {
            Self::numerical(e.to_string())
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "fwdvol",
    version,
    about = "Option pricing on forward curves with affine stochastic volatility",
    after_help = "Config values can be overridden with dotted paths, e.g. --pricing.K=2 --model.beta=0.5"
)]
struct Cli {
    /// Worker threads (falls back to PRICER_THREADS, then all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fourier price of the configured option.
    Price { config: String },
    /// Affine moment generating function on a λ grid, optionally against Monte Carlo.
    Mgf {
        config: String,
        /// Imaginary parts λ of the argument ν + iλ.
        #[arg(long, value_delimiter = ',', default_value = "0,1,2,5")]
        lambda: Vec<f64>,
        /// Also estimate the MGF by simulation (Wishart model).
        #[arg(long)]
        mc: bool,
    },
    /// Relative price differences across truncation ranks, written as CSV.
    Table {
        config: String,
        #[arg(long, value_enum)]
        sweep: SweepArg,
        /// Sweep values (θ or β).
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        /// Truncation ranks; the largest is the baseline.
        #[arg(long = "N", value_delimiter = ',', default_value = "2,3,5,8,10")]
        n: Vec<usize>,
        #[arg(long)]
        out: String,
    },
    /// Affine price against a Monte Carlo estimate, with wall times.
    McCompare { config: String },
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
enum SweepArg {
    Theta,
    Beta,
}

impl From<SweepArg> for SweepKind {
    fn from(s: SweepArg) -> Self {
        match s {
            SweepArg::Theta => SweepKind::Theta,
            SweepArg::Beta => SweepKind::Beta,
        }
    }
}

type Overrides = Vec<(String, String)>;

/// Splits `--a.b=value` overrides from the arguments clap should see.
fn split_overrides(args: impl Iterator<Item = String>) -> Result<(Vec<String>, Overrides), CliError> {
    let mut rest = Vec::new();
    let mut overrides = Vec::new();
    for arg in args {
        match arg.strip_prefix("--") {
            Some(body) if body.split('=').next().is_some_and(|k| k.contains('.')) => {
                let (key, value) = body
                    .split_once('=')
                    .ok_or_else(|| CliError::validation(format!("override `{arg}` needs the form --key=value")))?;
                overrides.push((key.to_string(), value.to_string()));
            }
            _ => rest.push(arg),
        }
    }
    Ok((rest, overrides))
}

fn thread_count(flag: Option<usize>) -> Result<Option<usize>, CliError> {
    if let Some(n) = flag {
        return Ok(Some(n));
    }
    match std::env::var("PRICER_THREADS") {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| CliError::validation(format!("PRICER_THREADS must be a positive integer, got `{v}`"))),
        Err(_) => Ok(None),
    }
}

fn run(cli: Cli, overrides: &[(String, String)]) -> Result<(), CliError> {
    if let Some(n) = thread_count(cli.threads)? {
        if n == 0 {
            return Err(CliError::validation("threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::validation(format!("thread pool: {e}")))?;
    }
    let doc = match cli.command {
        Command::Price { config } => commands::price(&config::load(&config, overrides)?)?,
        Command::Mgf { config, lambda, mc } => commands::mgf(&config::load(&config, overrides)?, &lambda, mc)?,
        Command::Table { config, sweep, values, n, out } => {
            commands::table(&config::load(&config, overrides)?, sweep.into(), &values, &n, &out)?
        }
        Command::McCompare { config } => commands::mc_compare(&config::load(&config, overrides)?)?,
    };
    println!("{}", serde_json::to_string_pretty(&doc.value).expect("JSON values always serialize"));
    match doc.failure {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    let result = split_overrides(std::env::args()).and_then(|(args, overrides)| {
        let cli = Cli::try_parse_from(args).unwrap_or_else(|e| e.exit());
        run(cli, &overrides)
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let kind = match e.kind {
                ErrorKind::Validation => "validation",
                ErrorKind::Numerical => "numerical",
            };
            let line = serde_json::json!({ "error": kind, "message": e.message });
            eprintln!("{line}");
            ExitCode::from(e.code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_are_split_from_flags() {
        let args = ["fwdvol", "price", "c.json", "--pricing.K=2", "--threads", "2", "--model.drift=none"];
        let (rest, ov) = split_overrides(args.iter().map(|s| s.to_string())).unwrap();
        assert_eq!(rest, vec!["fwdvol", "price", "c.json", "--threads", "2"]);
        assert_eq!(ov, vec![("pricing.K".into(), "2".into()), ("model.drift".into(), "none".into())]);
        assert!(split_overrides(["--pricing.K"].iter().map(|s| s.to_string())).is_err());
    }
}
