//! Command-line front end.
//!
//! Four subcommands share one binary:
//!
//! * `gic` solves the ground-induced DC circuit for a fixed field and
//!   prints `kind,id,bus,effective_gic_amps,qloss_mvar` rows, transformers
//!   first, then one aggregate row per loss bus.
//! * `solve` sweeps planning variants over storm levels and redispatch
//!   allowances and writes `report.csv`, a `trace_<cell>.csv` per cell,
//!   optional `model_<cell>.lp.txt` listings, and a `plot_<level>.svg`
//!   chart per storm level into the output directory. Cells run in
//!   parallel up to `--jobs`; every file is written atomically and the
//!   column set is stable.
//! * `maglat` converts a geographic location to dipole coordinates and
//!   names the storm-table latitude band it falls in.
//! * `vertices` prints the polygonal field support as
//!   `index,omega_e,omega_n` rows.
//!
//! Exit codes: 0 on success, 1 when a solve or write fails, 2 for bad
//! arguments.

mod commands;
mod output;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::dro::CaseMode;
use crate::uncertainty::StormLevel;

#[derive(Debug, Parser)]
#[command(
    name = "gicmit",
    version,
    about = "Storm-aware transmission switching and dispatch planning"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the DC circuit for a fixed geo-electric field.
    Gic(GicArgs),
    /// Sweep planning variants over storm levels and redispatch allowances.
    Solve(SolveArgs),
    /// Convert a geographic location to dipole coordinates.
    Maglat(MaglatArgs),
    /// List the vertices of the polygonal field support.
    Vertices(VerticesArgs),
}

/// Where the case document comes from.
#[derive(Debug, Clone, Args)]
pub struct CaseSource {
    /// Use the built-in 21-bus benchmark system.
    #[arg(long)]
    pub epri21: bool,
    /// Load a case document from a file.
    #[arg(long, value_name = "PATH")]
    pub case: Option<PathBuf>,
    /// Merge this JSON overlay over the case before loading.
    #[arg(long, value_name = "PATH")]
    pub overlay: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GicArgs {
    #[command(flatten)]
    pub source: CaseSource,
    /// Eastward field component, V/km.
    #[arg(long, value_name = "V_PER_KM", allow_negative_numbers = true)]
    pub nu_e: f64,
    /// Northward field component, V/km.
    #[arg(long, value_name = "V_PER_KM", allow_negative_numbers = true)]
    pub nu_n: f64,
    /// Also write the table to this file.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

/// Planning variants accepted by `solve`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    /// Mean-field plan: one deterministic solve at the mean field.
    C0,
    /// Full robust plan.
    C1,
    /// Robust evaluation of the mean-field plan.
    C2,
    /// Robust plan with switching disabled.
    C3,
    /// Robust plan with every support vertex enrolled up front.
    Enumerate,
}

impl ModeArg {
    pub fn case_mode(self) -> Option<CaseMode> {
        match self {
            ModeArg::C0 => Some(CaseMode::C0),
            ModeArg::C1 => Some(CaseMode::C1),
            ModeArg::C2 => Some(CaseMode::C2),
            ModeArg::C3 => Some(CaseMode::C3),
            ModeArg::Enumerate => None,
        }
    }
}

impl fmt::Display for ModeArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ModeArg::C0 => "c0",
            ModeArg::C1 => "c1",
            ModeArg::C2 => "c2",
            ModeArg::C3 => "c3",
            ModeArg::Enumerate => "enumerate",
        };
        f.write_str(s)
    }
}

/// Storm severity, from the parameter table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LevelArg {
    Strong,
    Severe,
    Extreme,
}

impl LevelArg {
    pub fn storm(self) -> StormLevel {
        match self {
            LevelArg::Strong => StormLevel::Strong,
            LevelArg::Severe => StormLevel::Severe,
            LevelArg::Extreme => StormLevel::Extreme,
        }
    }
}

impl fmt::Display for LevelArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.storm().as_str())
    }
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub source: CaseSource,
    /// Planning variants to run, comma-separated.
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [ModeArg::C0, ModeArg::C1])]
    pub mode: Vec<ModeArg>,
    /// Storm severity levels to sweep, comma-separated.
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [LevelArg::Strong])]
    pub level: Vec<LevelArg>,
    /// Geomagnetic-latitude band of the system, e.g. 55-60.
    #[arg(long, default_value = "55-60")]
    pub band: String,
    /// Redispatch allowances to sweep, percent of capacity.
    #[arg(long, value_delimiter = ',', default_values_t = [0.0, 5.0, 10.0, 15.0, 20.0])]
    pub ramp: Vec<f64>,
    /// Angular spacing of the support polygon, degrees; must divide 180.
    #[arg(long, default_value_t = 2.0)]
    pub delta: f64,
    /// Relative bound-gap tolerance for the robust loop.
    #[arg(long, default_value_t = 1e-4)]
    pub eps: f64,
    /// Wall-clock budget per cell, seconds.
    #[arg(long, value_name = "SECONDS")]
    pub time_limit: Option<f64>,
    /// Sweep cells to run in parallel.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Also write each cell's model in text form.
    #[arg(long)]
    pub emit_model: bool,
    /// Points for one-dimensional quadratic envelopes.
    #[arg(long, value_name = "N")]
    pub points_quadratic: Option<usize>,
    /// Points per axis for the cone-cut grid.
    #[arg(long, value_name = "N")]
    pub points_cone: Option<usize>,
    /// Points per axis for the thermal-circle tangent grid.
    #[arg(long, value_name = "N")]
    pub points_thermal: Option<usize>,
    /// Coarser envelopes for quick runs.
    #[arg(long)]
    pub lean: bool,
}

#[derive(Debug, Args)]
pub struct MaglatArgs {
    /// Geographic latitude, degrees.
    #[arg(long, allow_negative_numbers = true)]
    pub lat: f64,
    /// Geographic longitude, degrees.
    #[arg(long, allow_negative_numbers = true)]
    pub lon: f64,
    /// Field-model epoch year.
    #[arg(long, default_value_t = 2015)]
    pub epoch: u32,
}

#[derive(Debug, Args)]
pub struct VerticesArgs {
    /// Support radius, V/km.
    #[arg(long, value_name = "V_PER_KM")]
    pub nu_max: Option<f64>,
    /// Take the radius from the storm table instead.
    #[arg(long, value_enum)]
    pub level: Option<LevelArg>,
    /// Geomagnetic-latitude band for --level.
    #[arg(long, default_value = "55-60")]
    pub band: String,
    /// Angular spacing, degrees; must divide 180.
    #[arg(long, default_value_t = 2.0)]
    pub delta: f64,
    /// Also write the table to this file.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

/// Failures the front end maps onto exit codes: bad arguments exit 2,
/// everything else exits 1.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Failure(String),
}

/// Parse the command line, run the chosen subcommand, and map the outcome
/// onto an exit code.
pub fn main_entry() -> ExitCode {
    let _ = env_logger::Builder::from_env(
        env_logger::Env::default().default_filter_or("warn"),
    )
    .try_init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Failure(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Gic(args) => commands::cmd_gic(args),
        Command::Solve(args) => commands::cmd_solve(args),
        Command::Maglat(args) => commands::cmd_maglat(args),
        Command::Vertices(args) => commands::cmd_vertices(args),
    }
}
