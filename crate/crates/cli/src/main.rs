//! `popdyn`: run scenarios, sweep seeds and query the reference oracles.

mod oracle_cmd;
mod record;
mod sweep;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use popdyn::{Error, Scenario};

use record::Format;

#[derive(Parser)]
#[command(name = "popdyn", version, about = "Dynamic size counting population protocol simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write its snapshot table.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also write a group histogram and a min-signal profile per snapshot.
        #[arg(long)]
        detail: bool,
        /// `json` writes snapshots.json next to the CSV table.
        #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
        format: FormatArg,
    },
    /// Run one scenario under several seeds and summarize them.
    Sweep {
        #[arg(long)]
        scenario: PathBuf,
        /// Comma-separated, e.g. `1,2,3`.
        #[arg(long, value_delimiter = ',', required = true)]
        seeds: Vec<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Reference computations that do not use the simulator.
    Oracle {
        #[command(subcommand)]
        which: oracle_cmd::OracleCommand,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

/// A failure and the exit status it maps to.
#[derive(Debug)]
pub enum Failure {
    /// Bad input: exit 2.
    Invalid(String),
    /// An event would shrink the population below two agents: exit 3.
    Underflow(String),
    /// Anything else, typically I/O: exit 1.
    Runtime(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Runtime(_) => 1,
            Failure::Invalid(_) => 2,
            Failure::Underflow(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Invalid(m) | Failure::Underflow(m) | Failure::Runtime(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Parse { line, column, .. } => Failure::Invalid(format!("line {line}, column {column}: {e}")),
            Error::InvalidScenario { .. } | Error::InvalidParameter { .. } => Failure::Invalid(e.to_string()),
            Error::SizeUnderflow { .. } => Failure::Underflow(e.to_string()),
            Error::PopulationTooSmall(_) | Error::Io(_) => Failure::Runtime(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

/// Reads and validates a scenario file, returning it with the digest of its
/// bytes.
pub fn load_scenario(path: &Path) -> Result<(Scenario, String), Failure> {
    let bytes = fs::read(path).map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))?;
    let text = String::from_utf8(bytes).map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))?;
    let scenario = Scenario::from_json(&text).map_err(|e| match Failure::from(e) {
        Failure::Invalid(m) => Failure::Invalid(format!("{}: {m}", path.display())),
        other => other,
    })?;
    Ok((scenario, record::digest(text.as_bytes())))
}

fn cmd_run(scenario: &Path, out: &Path, detail: bool, format: Format) -> Result<(), Failure> {
    let (scenario, digest) = load_scenario(scenario)?;
    let snaps = scenario.run()?;
    fs::create_dir_all(out)?;
    let record = record::write_run(out, &scenario, &digest, &snaps, detail, format)?;
    for p in &record.periods {
        let label = p.event.map_or("start".to_string(), |i| format!("event {i}"));
        match p.convergence_time {
            Some(c) => println!("{label} (t={}, n={}): converged after {c}", p.start, p.size),
            None => println!("{label} (t={}, n={}): not converged", p.start, p.size),
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { scenario, out, detail, format } => {
            let format = match format {
                FormatArg::Csv => Format::Csv,
                FormatArg::Json => Format::Json,
            };
            cmd_run(&scenario, &out, detail, format)
        }
        Command::Sweep { scenario, seeds, out } => sweep::cmd_sweep(&scenario, &seeds, &out),
        Command::Oracle { which } => oracle_cmd::cmd_oracle(which),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
