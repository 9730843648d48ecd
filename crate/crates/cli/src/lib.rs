//! Command-line front end: config resolution, run directories and the experiment recipes.

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use serde::Serialize;

pub mod commands;
mod config;
pub mod error;
mod output;

use commands::*;
use config::resolve;
pub use error::{CliError, ErrorRecord};
use output::RunDir;

#[derive(Parser)]
#[command(name = "chalpha", version, about = "Stochastic variational Camassa-Holm / Leray-alpha experiments")]
pub struct Cli {
    /// Flat JSON config; per-command flags override its entries.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Output directory for config, artifacts and manifest.
    #[arg(long, global = true, default_value = "chalpha-out")]
    pub out: PathBuf,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Basis identities, generator constants and the Itô-Stratonovich contraction.
    BasisReport(BasisArgs),
    /// Particle ensemble under the truncated flow, its noise record and inverse.
    SimulateFlow(FlowArgs),
    /// Richardson-extrapolated Monte Carlo generator against Σ c_ij ∂²_ij f + u·∇f.
    EstimateGenerator(GeneratorArgs),
    /// Shared-noise coupling of dyadic truncations.
    DyadicTest(DyadicArgs),
    /// Spatial Hölder exponent of the flow map over time.
    HoelderTest(HoelderArgs),
    /// Pseudo-spectral solve with snapshots and an energy table.
    SolvePde(PdeArgs),
    /// Energy identity residual of a Camassa-Holm solve.
    EnergyReport(PdeArgs),
    /// First-variation identity and finite-difference oracle over a battery.
    CheckVariation(VariationArgs),
    /// Battery pairing of a solver trajectory at two resolutions, with a negative control.
    Criticality(CriticalityArgs),
    /// Constrained action minimization against its closed form.
    MinimizeAction(MinimizeArgs),
    /// Enclosure of the lattice sum V against C₁|θ|² log(1/|θ|).
    VBound(VBoundArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::BasisReport(_) => "basis-report",
            Command::SimulateFlow(_) => "simulate-flow",
            Command::EstimateGenerator(_) => "estimate-generator",
            Command::DyadicTest(_) => "dyadic-test",
            Command::HoelderTest(_) => "hoelder-test",
            Command::SolvePde(_) => "solve-pde",
            Command::EnergyReport(_) => "energy-report",
            Command::CheckVariation(_) => "check-variation",
            Command::Criticality(_) => "criticality",
            Command::MinimizeAction(_) => "minimize-action",
            Command::VBound(_) => "v-bound",
        }
    }
}

macro_rules! dispatch {
    ($cli:expr, $args:expr, $params:ty, $run:path) => {{
        let p: $params = resolve($cli.config.as_deref(), $args, $cli.seed)?;
        let mut out = RunDir::create(&$cli.out, $cli.command.name(), p.seed, &p)?;
        let pass = $run(&p, &mut out)?;
        out.finish(pass)?;
        Ok(pass)
    }};
}

/// Runs one command; `Ok(true)` iff every declared check passed.
pub fn run(cli: &Cli) -> Result<bool, CliError> {
    match &cli.command {
        Command::BasisReport(a) => dispatch!(cli, a, BasisParams, basis_report),
        Command::SimulateFlow(a) => dispatch!(cli, a, FlowParams, simulate_flow),
        Command::EstimateGenerator(a) => dispatch!(cli, a, GeneratorParams, estimate_generator),
        Command::DyadicTest(a) => dispatch!(cli, a, DyadicParams, dyadic_test),
        Command::HoelderTest(a) => dispatch!(cli, a, HoelderParams, hoelder),
        Command::SolvePde(a) => dispatch!(cli, a, PdeParams, solve_pde),
        Command::EnergyReport(a) => dispatch!(cli, a, PdeParams, energy),
        Command::CheckVariation(a) => dispatch!(cli, a, VariationParams, check_variation),
        Command::Criticality(a) => dispatch!(cli, a, CriticalityParams, criticality),
        Command::MinimizeAction(a) => dispatch!(cli, a, MinimizeParams, minimize_action),
        Command::VBound(a) => dispatch!(cli, a, VBoundParams, v_bound),
    }
}

/// Exit status for a finished run; errors are reported on stderr and in `error.json`.
pub fn finish(cli: &Cli, result: Result<bool, CliError>) -> u8 {
    match result {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            let record = ErrorRecord {
                command: cli.command.name(),
                kind: e.kind(),
                message: e.to_string(),
            };
            let text = error_json(&record);
            eprintln!("{text}");
            if std::fs::create_dir_all(&cli.out).is_ok() {
                let _ = std::fs::write(cli.out.join("error.json"), format!("{text}\n"));
            }
            2
        }
    }
}

fn error_json(record: &impl Serialize) -> String {
    serde_json::to_string(record).unwrap_or_else(|e| format!("{{\"kind\":\"json\",\"message\":{:?}}}", e.to_string()))
}

/// Parses `args` (including the program name) and runs the command.
pub fn run_args<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => {
            let result = run(&cli);
            finish(&cli, result)
        }
        Err(e) => {
            let _ = e.print();
            2
        }
    }
}
