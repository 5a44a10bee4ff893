#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use keplink::units::UnitSystem;

mod commands;
mod output;

#[derive(Parser, Debug)]
#[command(name = "keplink", version, about = "Preliminary orbits by linking two short arcs")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct GlobalArgs {
    /// Unit system of every input and output.
    #[arg(long, global = true, value_enum, default_value_t = Units::AuDay)]
    pub units: Units,
    /// Gravitational parameter; defaults to the value of the unit system.
    #[arg(long, global = true)]
    pub mu: Option<f64>,
    /// Observer ephemeris table (`mjd,qx,qy,qz,vx,vy,vz`); defaults to the analytic
    /// observer of the unit system.
    #[arg(long, global = true)]
    pub ephemeris: Option<PathBuf>,
    #[arg(long, global = true)]
    pub spurious_tol: Option<f64>,
    #[arg(long, global = true, default_value_t = 100.0)]
    pub chi4_threshold: f64,
    /// Evaluation points of the resultant interpolation (power of two, at least 32).
    #[arg(long, global = true)]
    pub fft_points: Option<usize>,
    /// Seed of the noise generator; without it synthesized data are exact.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Curve grid: `N` nodes per axis, or `MIN:MAX:N`.
    #[arg(long, global = true)]
    pub grid: Option<String>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Units {
    AuDay,
    KmS,
}

impl From<Units> for UnitSystem {
    fn from(u: Units) -> Self {
        match u {
            Units::AuDay => UnitSystem::AuDay,
            Units::KmS => UnitSystem::KmS,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Link two optical attributables.
    LinkOptical(LinkArgs),
    /// Link a radar attributable (first file) with an optical one (second file).
    LinkRadarOptical(LinkArgs),
    /// Synthesize an attributable pair from known elements, or run a seeded batch.
    Synth(SynthArgs),
    /// Sample q, p, the Laplace-Lenz residual and the energy curve on a grid.
    Curves(CurvesArgs),
    /// Recompute chi4 for a solutions file against the second attributable.
    Rescore(RescoreArgs),
}

#[derive(Args, Debug)]
pub struct LinkArgs {
    pub first: PathBuf,
    pub second: PathBuf,
    /// Solutions file; stdout when absent. With several pairs per file this is a directory.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    /// Keplerian elements as JSON (`a, e, i, node, peri, mean_anomaly, epoch`; angles in radians).
    #[arg(long, required_unless_present = "batch")]
    pub elements: Option<PathBuf>,
    /// Mean epochs of the two attributables (MJD).
    #[arg(long, num_args = 2, value_names = ["T1", "T2"])]
    pub epochs: Option<Vec<f64>>,
    #[arg(long, value_enum, default_value_t = Kind::Optical)]
    pub kind: Kind,
    /// Angle noise, arcsec.
    #[arg(long, default_value_t = 0.5)]
    pub sigma_angle: f64,
    /// Angular rate noise, arcsec per time unit.
    #[arg(long, default_value_t = 1.0)]
    pub sigma_rate: f64,
    #[arg(long, default_value_t = 1e-8)]
    pub sigma_rho: f64,
    #[arg(long, default_value_t = 1e-9)]
    pub sigma_rhodot: f64,
    /// Random orbits to synthesize and link; prints a success report.
    #[arg(long)]
    pub batch: Option<usize>,
    /// Output directory for `att1.jsonl`, `att2.jsonl` and `truth.json`.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Optical,
    Radar,
}

#[derive(Args, Debug)]
pub struct CurvesArgs {
    pub first: PathBuf,
    pub second: PathBuf,
    /// Directory receiving `q.csv`, `p.csv`, `lenz.csv` and `energy.csv`.
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct RescoreArgs {
    pub solutions: PathBuf,
    /// Attributable file whose first record is the second attributable of the link.
    pub second: PathBuf,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::LinkOptical(a) => commands::link(&cli.global, a, false),
        Command::LinkRadarOptical(a) => commands::link(&cli.global, a, true),
        Command::Synth(a) => commands::synth(&cli.global, a),
        Command::Curves(a) => commands::curves(&cli.global, a),
        Command::Rescore(a) => commands::rescore(&cli.global, a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            let diag = output::Diagnostic::from_error(&e);
            eprint!("{}", output::to_json(&diag).unwrap_or_else(|_| format!("{{\"error\":\"{}\"}}\n", e.code())));
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
