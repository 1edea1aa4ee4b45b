//! `cube-energy`: batch front end for the cube-energy library.
//!
//! Exit codes: 0 success, 1 property violation, 2 usage, 3 budget exceeded.

mod commands;
mod sets;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use cube_energy::report::SCHEMA_VERSION;

#[derive(Parser, Debug)]
#[command(
    name = "cube-energy",
    version,
    about = "Exact energies, sharp exponents and extension constants on discrete cubes"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct Global {
    /// Worker threads (default: all cores); results do not depend on it.
    #[arg(long, global = true)]
    #[serde(skip)]
    threads: Option<usize>,
    /// Seed for every randomised step; echoed in the report.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Report file (default: stdout).
    #[arg(long, global = true)]
    #[serde(skip)]
    output: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug, Clone, Serialize)]
#[serde(rename_all = "kebab-case", tag = "command")]
enum Command {
    /// Exact E_k or Ẽ_k of a point set.
    Energy(commands::EnergyArgs),
    /// Sweep subsets of a cube against an energy exponent.
    Verify(commands::VerifyArgs),
    /// Certified coefficient sign table.
    Signs(commands::SignsArgs),
    /// Sampled curves with certified second differences.
    Curves(commands::CurvesArgs),
    /// Discrete extension constant experiments.
    #[command(subcommand)]
    Extension(commands::ExtensionCmd),
    /// Level-set witness search on {0..n}^d.
    Witness(commands::WitnessArgs),
    /// Split identities for the last-coordinate decomposition.
    IdentityCheck(commands::IdentityArgs),
    /// Interval bounds for the E_2 exponent of {0..n}^d.
    TnBounds(commands::TnArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Energy(_) => "energy",
            Command::Verify(_) => "verify",
            Command::Signs(_) => "signs",
            Command::Curves(_) => "curves",
            Command::Extension(_) => "extension",
            Command::Witness(_) => "witness",
            Command::IdentityCheck(_) => "identity-check",
            Command::TnBounds(_) => "tn-bounds",
        }
    }
}

/// What a command produced: the JSON report body, an optional CSV
/// rendering, and whether an asserted property failed.
pub struct Outcome {
    pub report: serde_json::Value,
    pub csv: Option<String>,
    pub violation: bool,
}

#[derive(Serialize)]
struct Config<'a> {
    #[serde(flatten)]
    global: &'a Global,
    #[serde(flatten)]
    command: &'a Command,
}

#[derive(Serialize)]
struct Envelope<'a> {
    schema: u32,
    command: &'static str,
    config: Config<'a>,
    status: &'static str,
    report: &'a serde_json::Value,
}

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Budget(String),
}

impl From<cube_energy::Error> for Failure {
    fn from(e: cube_energy::Error) -> Self {
        match e {
            cube_energy::Error::BudgetExceeded(_) => Failure::Budget(e.to_string()),
            other => Failure::Usage(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

fn run(cli: &Cli) -> Result<bool, Failure> {
    let g = &cli.global;
    let outcome = match &cli.command {
        Command::Energy(a) => commands::energy(a)?,
        Command::Verify(a) => commands::verify(a, g.seed)?,
        Command::Signs(a) => commands::signs(a)?,
        Command::Curves(a) => commands::curves(a)?,
        Command::Extension(c) => commands::extension(c, g.seed)?,
        Command::Witness(a) => commands::witness(a)?,
        Command::IdentityCheck(a) => commands::identity_check(a, g.seed)?,
        Command::TnBounds(a) => commands::tn_bounds(a)?,
    };
    let text = match g.format {
        Format::Csv => outcome
            .csv
            .ok_or_else(|| Failure::Usage(format!("`{}` has no CSV output", cli.command.name())))?,
        Format::Json => {
            let env = Envelope {
                schema: SCHEMA_VERSION,
                command: cli.command.name(),
                config: Config {
                    global: g,
                    command: &cli.command,
                },
                status: if outcome.violation { "violation" } else { "ok" },
                report: &outcome.report,
            };
            let mut s = serde_json::to_string_pretty(&env).expect("reports serialize");
            s.push('\n');
            s
        }
    };
    match &g.output {
        Some(path) => std::fs::write(path, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    if outcome.violation {
        eprintln!("property violation; the report carries the witness");
    }
    Ok(!outcome.violation)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if let Some(n) = cli.global.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .expect("thread pool is configured once");
    }
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Budget(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(3)
        }
    }
}
