//! `casimir`: command-line front end for casimir-core.
//!
//! Inputs and outputs are SI. Physical constants can be overridden with a
//! TOML file named by the `CASIMIR_CONSTANTS` environment variable.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use casimir_core::PhysicalConstants;

use crate::error::CliError;
use crate::output::Format;

#[derive(Debug, Parser)]
#[command(
    name = "casimir",
    version,
    about = "Casimir, black-hole and driven-capacitor thermodynamics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Output file (stdout if omitted).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Output format; each subcommand has its own default.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Casimir energy, pressure and compressibility between ideal plates.
    Casimir(CasimirArgs),
    /// Schwarzschild black-hole entropy, temperature and heat capacity.
    Blackhole(BlackholeArgs),
    /// Isothermal compressibility of a sampled isotherm.
    Stability(StabilityArgs),
    /// Equilibrium gap of the drive-averaged capacitor energy.
    Equilibrium(EquilibriumArgs),
    /// Equilibrium over a grid of drive parameters.
    Sweep(ConfigArgs),
    /// Time-domain simulation of the driven plate.
    Simulate(ConfigArgs),
    /// Recover the Casimir coefficient from a regularized mode sum.
    VerifyCasimir(VerifyArgs),
    /// Measure the averaged 1/z^4 coefficient by direct simulation.
    MeasureK(ConfigArgs),
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
struct CasimirArgs {
    /// Plate separation [m].
    #[arg(long)]
    z: Option<f64>,
    /// Grid `zmin,zmax,n[,log|lin]` in metres (log spacing by default).
    #[arg(long)]
    grid: Option<String>,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
struct BlackholeArgs {
    /// Mass [kg].
    #[arg(long)]
    mass: Option<f64>,
    /// Hawking temperature [K].
    #[arg(long)]
    temperature: Option<f64>,
}

#[derive(Debug, Args)]
struct StabilityArgs {
    /// CSV file with columns `z,P` (m, Pa).
    #[arg(long)]
    input: PathBuf,
    /// Temperature label of the isotherm [K].
    #[arg(long, default_value_t = 0.0)]
    temperature: f64,
    /// Also write the JSON summary of violation intervals here.
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EquilibriumArgs {
    /// DC voltage [V].
    #[arg(long)]
    u: f64,
    /// RMS AC voltage [V].
    #[arg(long = "u-ac")]
    u_ac: f64,
    /// Drive angular frequency [rad/s].
    #[arg(long)]
    omega: f64,
    /// Areal mass of the moving plate [kg/m^2].
    #[arg(long)]
    mu: f64,
    #[arg(long)]
    no_casimir: bool,
    #[arg(long)]
    no_coulomb: bool,
    /// Lower end of the search bracket [m].
    #[arg(long, default_value_t = 1e-9)]
    z_lo: f64,
    /// Upper end of the search bracket [m].
    #[arg(long, default_value_t = 1e-3)]
    z_hi: f64,
    /// Relative tolerance on the gap.
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
}

#[derive(Debug, Args)]
struct ConfigArgs {
    /// JSON configuration file (SI units).
    #[arg(long)]
    config: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum RegulatorChoice {
    Exp,
    Em,
    Both,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[arg(long, value_enum, default_value_t = RegulatorChoice::Both)]
    regulator: RegulatorChoice,
    /// Relative tolerance against pi^2/720.
    #[arg(long, default_value_t = casimir_core::modesum::DEFAULT_TOLERANCE)]
    tol: f64,
    /// First regulator level (delta = 1/scale or s = 1/scale).
    #[arg(long, default_value_t = 4.0)]
    cutoff_scale: f64,
    /// Richardson extrapolation columns.
    #[arg(long, default_value_t = 4)]
    orders: usize,
}

fn main() {
    std::process::exit(run());
}

fn report_error(e: &CliError) -> i32 {
    eprintln!("{}", e.record());
    e.exit_code()
}

fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return 0;
            }
            let _ = e.print();
            let msg = e.render().to_string();
            let summary = msg
                .lines()
                .take_while(|l| !l.starts_with("Usage:"))
                .map(str::trim)
                .filter(|l| !l.is_empty())
                .collect::<Vec<_>>()
                .join(" ");
            let summary = summary.trim_start_matches("error: ").to_string();
            return report_error(&CliError::Config(summary));
        }
    };
    let consts = match PhysicalConstants::from_env() {
        Ok(c) => c,
        Err(e) => return report_error(&CliError::Core(e)),
    };
    let outcome = match commands::execute(&cli.command, &consts) {
        Ok(o) => o,
        Err(e) => return report_error(&e),
    };
    let format = cli.format.unwrap_or(outcome.default_format);
    let text = outcome.report.render(format);
    if let Err(e) = output::emit(&text, cli.out.as_deref()) {
        return report_error(&e);
    }
    if let Some(extra) = &outcome.side_output {
        if let Err(e) = output::emit(&extra.1, Some(&extra.0)) {
            return report_error(&e);
        }
    }
    match &outcome.failure {
        Some(f) => report_error(f),
        None => 0,
    }
}
