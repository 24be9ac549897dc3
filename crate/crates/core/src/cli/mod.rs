//! Command-line driver.
//!
//! Every flag has a config-file equivalent and wins over it. Exit codes:
//! 0 success, 1 configuration or parse error, 2 a verification or
//! constraint check failed.

mod commands;
pub mod config;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use commands::{execute, Outcome, OutputFile};
pub use config::{CSpec, GridSpec, NumOrVec, RunConfig, SeedSpec, SweepSpec};

use crate::integrability::EtaVariant;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Compute(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 1,
            CliError::Compute(_) => 2,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "isospec", version, about = "Intertwined Schrödinger potentials: construction and checks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    Validate,
    Construct,
    Verify,
    Spectrum,
    Hierarchy,
    ConvertCoords,
    Presets,
}

impl CommandKind {
    pub fn name(self) -> &'static str {
        match self {
            CommandKind::Validate => "validate",
            CommandKind::Construct => "construct",
            CommandKind::Verify => "verify",
            CommandKind::Spectrum => "spectrum",
            CommandKind::Hierarchy => "hierarchy",
            CommandKind::ConvertCoords => "convert-coords",
            CommandKind::Presets => "presets",
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the integrability constraints for (n, a, c)
    Validate(Flags),
    /// Build a pair and sample V0, V1, L0 on a grid
    Construct(Flags),
    /// Identity residuals and finite-difference convergence of a pair
    Verify(Flags),
    /// Partner spectra, or the separated planar problem
    Spectrum(Flags),
    /// Darboux chain, optionally embedded in the plane
    Hierarchy(Flags),
    /// Map Cartesian points to the curvilinear charts
    ConvertCoords(Flags),
    /// List the n = 3 parameter presets with their validation
    Presets(Flags),
}

impl Command {
    fn split(self) -> (CommandKind, Flags) {
        match self {
            Command::Validate(f) => (CommandKind::Validate, f),
            Command::Construct(f) => (CommandKind::Construct, f),
            Command::Verify(f) => (CommandKind::Verify, f),
            Command::Spectrum(f) => (CommandKind::Spectrum, f),
            Command::Hierarchy(f) => (CommandKind::Hierarchy, f),
            Command::ConvertCoords(f) => (CommandKind::ConvertCoords, f),
            Command::Presets(f) => (CommandKind::Presets, f),
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// JSON config; flags override its fields
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// directory for output files
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, alias = "dimension")]
    pub n: Option<usize>,
    /// translation part, e.g. 1,0,0
    #[arg(long, value_parser = list_of_f64, allow_hyphen_values = true)]
    pub a: Option<List<f64>>,
    /// rotation part: c12, (c1,c2,c3), upper triangle, or rows joined by ';'
    #[arg(long, value_parser = config::parse_c, allow_hyphen_values = true)]
    pub c: Option<CSpec>,
    /// n = 3 preset row, 1..=10
    #[arg(long)]
    pub preset: Option<usize>,
    /// 2d, general, 3d, free-motion-2d, free-motion-3d, translational, constant-shift, 1d, embed-2d
    #[arg(long)]
    pub family: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub f: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub h: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub g: Option<String>,
    /// the ξ-potential 𝒱(xi)
    #[arg(long = "xi-potential", allow_hyphen_values = true)]
    pub calv: Option<String>,
    /// the ρ-potential ℋ(rho)
    #[arg(long = "rho-potential", allow_hyphen_values = true)]
    pub calh: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub phi: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub p0: Option<f64>,
    #[arg(long, value_parser = list_of_f64, allow_hyphen_values = true)]
    pub b: Option<List<f64>>,
    #[arg(long, allow_hyphen_values = true)]
    pub b1: Option<f64>,
    /// free-motion kind in space, 1..=3
    #[arg(long)]
    pub kind: Option<u8>,
    #[arg(long, value_enum)]
    pub eta: Option<EtaArg>,
    /// 1-based index pair i,j with eta = L_i/L_j
    #[arg(long, value_parser = parse_pair)]
    pub pair: Option<[usize; 2]>,
    #[arg(long, allow_hyphen_values = true)]
    pub energy: Option<f64>,
    /// lo:hi:n, lists allowed for lo and hi
    #[arg(long, value_parser = config::parse_grid, allow_hyphen_values = true)]
    pub grid: Option<GridSpec>,
    #[arg(long = "rho-grid", value_parser = config::parse_grid, allow_hyphen_values = true)]
    pub rho_grid: Option<GridSpec>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub level: Option<usize>,
    #[arg(long = "level-plus")]
    pub level_plus: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub m: Option<f64>,
    /// eigen-index seeds, e.g. 0,0,0
    #[arg(long, value_parser = list_of_seeds)]
    pub seeds: Option<List<SeedSpec>>,
    #[arg(long)]
    pub tolerance: Option<f64>,
    #[arg(long = "min-order")]
    pub min_order: Option<f64>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_delimiter = ',')]
    pub cells: Option<Vec<usize>>,
    #[arg(long, value_parser = list_of_f64, allow_hyphen_values = true)]
    pub center: Option<List<f64>>,
    #[arg(long)]
    pub width: Option<f64>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub symmetry: Option<bool>,
    /// shift V1 by this constant (negative control)
    #[arg(long, allow_hyphen_values = true)]
    pub corrupt: Option<f64>,
    /// b=v1,v2;b1=w1,w2
    #[arg(long, value_parser = config::parse_sweep, allow_hyphen_values = true)]
    pub sweep: Option<SweepSpec>,
    /// CSV of x,y[,z] points
    #[arg(long)]
    pub points: Option<PathBuf>,
}

/// A comma-separated list given as one flag value.
#[derive(Debug, Clone, PartialEq)]
pub struct List<T>(pub Vec<T>);

fn list_of_f64(s: &str) -> Result<List<f64>, String> {
    config::parse_list(s).map(List)
}

fn list_of_seeds(s: &str) -> Result<List<SeedSpec>, String> {
    config::parse_seeds(s).map(List)
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub enum EtaArg {
    Eta,
    Eta2,
    Eta3,
}

fn parse_pair(s: &str) -> Result<[usize; 2], String> {
    let v: Vec<usize> = s
        .split(',')
        .map(|t| t.trim().parse().map_err(|e| format!("{t:?}: {e}")))
        .collect::<Result<_, _>>()?;
    <[usize; 2]>::try_from(v).map_err(|v| format!("expected two indices, got {}", v.len()))
}

impl Flags {
    fn to_config(&self) -> RunConfig {
        let f = self.clone();
        RunConfig {
            command: None,
            n: f.n,
            a: f.a.map(|l| l.0),
            c: f.c,
            preset: f.preset,
            family: f.family,
            f: f.f,
            h: f.h,
            g: f.g,
            calv: f.calv,
            calh: f.calh,
            phi: f.phi,
            p0: f.p0,
            b: f.b.map(|l| NumOrVec::Vec(l.0)),
            b1: f.b1,
            kind: f.kind,
            eta: f.eta.map(|e| match e {
                EtaArg::Eta => EtaVariant::Eta,
                EtaArg::Eta2 => EtaVariant::Eta2,
                EtaArg::Eta3 => EtaVariant::Eta3,
            }),
            pair: f.pair,
            energy: f.energy,
            grid: f.grid,
            rho_grid: f.rho_grid,
            k: f.k,
            level: f.level,
            level_plus: f.level_plus,
            m: f.m,
            seeds: f.seeds.map(|l| l.0),
            tolerance: f.tolerance,
            min_order: f.min_order,
            samples: f.samples,
            seed: f.seed,
            cells: f.cells,
            center: f.center.map(|l| l.0),
            width: f.width,
            sigma: f.sigma,
            symmetry: f.symmetry,
            corrupt: f.corrupt,
            sweep: f.sweep,
            points: f.points,
            out: f.out,
        }
    }
}

/// Config file (if any) with the flags laid over it.
pub fn resolve(kind: CommandKind, flags: &Flags) -> Result<RunConfig, CliError> {
    let mut cfg = match &flags.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(c) = &cfg.command {
        if c != kind.name() {
            return Err(CliError::Config(format!(
                "config is for command {c:?}, invoked as {:?}",
                kind.name()
            )));
        }
    }
    cfg.overlay(&flags.to_config());
    Ok(cfg)
}

/// Writes the outcome's files under `out` (if set) and prints its summary.
pub fn emit(outcome: &Outcome, out: Option<&std::path::Path>) -> Result<(), CliError> {
    if let Some(dir) = out {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
        for f in &outcome.files {
            let path = dir.join(&f.name);
            std::fs::write(&path, &f.contents).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        }
    }
    println!("{}", outcome.summary);
    Ok(())
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let (kind, flags) = cli.command.split();
    let result = resolve(kind, &flags).and_then(|cfg| {
        let outcome = execute(kind, &cfg)?;
        emit(&outcome, cfg.out.as_deref())?;
        Ok(outcome)
    });
    match result {
        Ok(o) if o.passed => 0,
        Ok(_) => 2,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// `env_logger` driven by `ISOSPEC_LOG` (default `warn`).
pub fn init_logging() {
    let env = env_logger::Env::new().filter_or("ISOSPEC_LOG", "warn");
    let _ = env_logger::Builder::from_env(env).format_timestamp(None).try_init();
}
