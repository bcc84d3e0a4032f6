//! Command-line front end: `relax`, `slab`, `certify` and `linearized`.
//!
//! Exit codes: 0 success, 1 inequality violation, 2 configuration or I/O
//! error, 3 numerical failure.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::error::Error;

mod commands;
pub mod output;
pub mod scenario;

pub use commands::{
    certification_table, cmd_certify, cmd_linearized, cmd_relax, cmd_slab, summary_path,
    LinearizedRow, LinearizedSummary, RelaxRow, RelaxSummary, SlabRow, SlabSummary, FIT_FLOOR,
    LINEARIZED_TOL,
};
pub use scenario::{Format, InitialData, Kind, Scenario, SlabInit};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATION: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Lab(#[from] Error),
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Lab(e) if e.is_numerical() => EXIT_NUMERICAL,
            _ => EXIT_CONFIG,
        }
    }
}

/// Result of a command that ran to completion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Success,
    Violations(usize),
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Success | Outcome::Violations(0) => EXIT_OK,
            Outcome::Violations(_) => EXIT_VIOLATION,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "esbgk", version, about = "ES-BGK entropy laboratory")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Spatially homogeneous relaxation; writes a trajectory and a decay summary.
    Relax(ScenarioArgs),
    /// Periodic one-dimensional slab with transport along x.
    Slab(ScenarioArgs),
    /// Checks the entropy inequalities over a seeded mixture ensemble.
    Certify(ScenarioArgs),
    /// Sweeps the linearized dissipation identity over the nu grid.
    Linearized(ScenarioArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct ScenarioArgs {
    /// Scenario file with one `key = value` per line; flags override it.
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    #[arg(long, allow_negative_numbers = true)]
    pub nu: Option<f64>,
    /// Constant collision frequency sigma.
    #[arg(long, conflicts_with_all = ["sigma_alpha", "sigma_beta"])]
    pub sigma_const: Option<f64>,
    /// sigma = rho^alpha T^beta.
    #[arg(long)]
    pub sigma_alpha: Option<f64>,
    #[arg(long)]
    pub sigma_beta: Option<f64>,
    #[arg(long)]
    pub grid_n: Option<usize>,
    /// Grid half-width, or `auto`.
    #[arg(long)]
    pub vmax: Option<String>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub t_end: Option<f64>,
    #[arg(long)]
    pub count: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_parser = ["off", "on"])]
    pub correction: Option<String>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Uniform tolerance for every checked inequality.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Any scenario key, as `KEY=VALUE`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

impl ScenarioArgs {
    fn overrides(&self) -> Vec<(String, String)> {
        let mut out: Vec<(String, String)> = Vec::new();
        let mut push = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                out.push((k.to_string(), v));
            }
        };
        push("nu", self.nu.map(|x| x.to_string()));
        push("sigma_const", self.sigma_const.map(|x| x.to_string()));
        push("sigma_alpha", self.sigma_alpha.map(|x| x.to_string()));
        push("sigma_beta", self.sigma_beta.map(|x| x.to_string()));
        push("grid_n", self.grid_n.map(|x| x.to_string()));
        push("vmax", self.vmax.clone());
        push("dt", self.dt.map(|x| x.to_string()));
        push("t_end", self.t_end.map(|x| x.to_string()));
        push("count", self.count.map(|x| x.to_string()));
        push("seed", self.seed.map(|x| x.to_string()));
        push("correction", self.correction.clone());
        push(
            "format",
            self.format.map(|f| format!("{f:?}").to_lowercase()),
        );
        push("out", self.out.as_ref().map(|p| p.display().to_string()));
        push("tol", self.tol.map(|x| x.to_string()));
        out
    }

    /// Scenario file (if any), then `--set` pairs, then dedicated flags.
    pub fn scenario(&self) -> Result<Scenario, Error> {
        let mut s = match &self.scenario {
            Some(p) => Scenario::from_file(p)?,
            None => Scenario::default(),
        };
        for pair in &self.set {
            let (k, v) = pair.split_once('=').ok_or_else(|| {
                Error::InvalidConfig(format!("--set expects KEY=VALUE, got {pair:?}"))
            })?;
            s.apply(k.trim(), v.trim())?;
        }
        for (k, v) in self.overrides() {
            s.apply(&k, &v)?;
        }
        Ok(s)
    }
}

pub fn run_command(kind: Kind, args: &ScenarioArgs) -> Result<Outcome, CliError> {
    let scenario = args.scenario()?;
    scenario.validate(kind)?;
    match kind {
        Kind::Relax => cmd_relax(&scenario),
        Kind::Slab => cmd_slab(&scenario),
        Kind::Certify => cmd_certify(&scenario),
        Kind::Linearized => cmd_linearized(&scenario),
    }
}

/// Parses `args` (including the program name) and runs the command; returns
/// the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let (kind, args) = match &cli.command {
        Command::Relax(a) => (Kind::Relax, a),
        Command::Slab(a) => (Kind::Slab, a),
        Command::Certify(a) => (Kind::Certify, a),
        Command::Linearized(a) => (Kind::Linearized, a),
    };
    match run_command(kind, args) {
        Ok(outcome) => outcome.exit_code(),
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
