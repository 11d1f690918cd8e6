//! `swarmlink`: describe -> retrieve -> simulate -> report, plus the
//! database generator and the perception evaluation harness.

mod commands;
mod config;
mod output;
mod svg;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;

/// Exit codes are a stable contract; scripts may branch on them.
pub const EXIT_OK: u8 = 0;
pub const EXIT_ERROR: u8 = 1;
pub const EXIT_SAFETY: u8 = 2;

/// Command failure carrying the process exit code.
#[derive(Debug)]
pub struct CliError {
    pub message: String,
    pub code: u8,
}

impl CliError {
    pub fn new(message: impl Into<String>) -> Self {
        CliError { message: message.into(), code: EXIT_ERROR }
    }

    pub fn safety(message: impl Into<String>) -> Self {
        CliError { message: message.into(), code: EXIT_SAFETY }
    }
}

/// Adds file/stage context to an error without losing its message.
pub fn ctx<E: std::fmt::Display>(what: impl std::fmt::Display) -> impl FnOnce(E) -> CliError {
    move |e| CliError::new(format!("{what}: {e}"))
}

#[derive(Parser)]
#[command(
    name = "swarmlink",
    version,
    about = "Deterministic 2D swarm navigation pipeline",
    long_about = "Deterministic 2D swarm navigation pipeline.\n\n\
        Configuration precedence: an explicit command-line flag beats the \
        --config file, which beats the built-in default. The config file is \
        TOML with a [sim] table (dt, max_t, collision_radius, goal_tol, seed) \
        and optional [sim.apf] (k_att, k_rep, rho0, cap) and [sim.deflection] \
        (r_imp, k_imp_f) tables."
)]
struct Cli {
    /// TOML configuration file; see long --help for the schema.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Base seed: simulation stall kicks, noisy analyzers, trial and search
    /// streams. Defaults to 0 (dbgen: 1, matching its library default).
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,

    /// Machine-readable JSON on stdout instead of the human report.
    #[arg(long, global = true)]
    json: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one scenario end to end; write trajectory CSV, metrics JSON,
    /// and an SVG plot into --out.
    Run(RunArgs),
    /// Run the noise-model evaluation over a directory of scenarios.
    Eval(EvalArgs),
    /// Query the database with a description text.
    Retrieve(RetrieveArgs),
    /// Search impedance profiles per scenario and write the database.
    Dbgen(DbgenArgs),
    /// Print the canonical description of a scenario.
    Describe(DescribeArgs),
}

#[derive(clap::Args)]
pub struct RunArgs {
    /// Scenario JSON file.
    #[arg(long, value_name = "FILE")]
    scenario: PathBuf,
    /// Database JSON file.
    #[arg(long, value_name = "FILE")]
    db: PathBuf,
    /// Output directory; created if missing.
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
    /// Scene analyzer backing the description.
    #[arg(long, value_enum, default_value_t = Analyzer::GroundTruth)]
    analyzer: Analyzer,
    /// Arena image for --analyzer remote.
    #[arg(long, value_name = "FILE")]
    image: Option<PathBuf>,
    /// Remote analyzer endpoint URL for --analyzer remote.
    #[arg(long, value_name = "URL")]
    endpoint: Option<String>,
    /// Override the simulation step size (s).
    #[arg(long, value_name = "SECONDS")]
    dt: Option<f64>,
    /// Override the simulated-time cap (s).
    #[arg(long = "max-t", value_name = "SECONDS")]
    max_t: Option<f64>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Analyzer {
    /// Exact description computed from the scenario.
    GroundTruth,
    /// Lighting-dependent noise preset taken from the scenario.
    Noisy,
    /// HTTP analyzer service; requires --image and --endpoint.
    Remote,
}

#[derive(clap::Args)]
pub struct EvalArgs {
    /// Directory of scenario JSON files.
    #[arg(long, value_name = "DIR")]
    scenarios: PathBuf,
    /// Database JSON file.
    #[arg(long, value_name = "FILE")]
    db: PathBuf,
    /// Trials per scenario.
    #[arg(long, default_value_t = 200)]
    trials: u64,
    /// Noise preset applied to every scenario.
    #[arg(long, value_enum, default_value_t = Preset::Optimal)]
    preset: Preset,
    /// Also write the per-scenario table as CSV.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    /// No noise at all; every trial must succeed.
    Zero,
    Optimal,
    Inadequate,
}

#[derive(clap::Args)]
pub struct RetrieveArgs {
    /// Database JSON file.
    #[arg(long, value_name = "FILE")]
    db: PathBuf,
    /// Description text to embed and look up.
    #[arg(long, value_name = "TEXT")]
    query: String,
}

#[derive(clap::Args)]
pub struct DbgenArgs {
    /// Directory of scenario JSON files.
    #[arg(long, value_name = "DIR")]
    scenarios: PathBuf,
    /// Candidate profiles evaluated per scenario.
    #[arg(long, default_value_t = 200)]
    samples: usize,
    /// Output database path.
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
}

#[derive(clap::Args)]
pub struct DescribeArgs {
    /// Scenario JSON file.
    #[arg(long, value_name = "FILE")]
    scenario: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // --help/--version arrive as parse errors but are not failures.
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_ERROR,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let global = commands::Global { config: cli.config, seed: cli.seed, json: cli.json };
    let outcome = match cli.command {
        Command::Run(a) => commands::run(&global, &a),
        Command::Eval(a) => commands::eval(&global, &a),
        Command::Retrieve(a) => commands::retrieve_cmd(&global, &a),
        Command::Dbgen(a) => commands::dbgen(&global, &a),
        Command::Describe(a) => commands::describe(&global, &a),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
