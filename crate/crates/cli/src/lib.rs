//! Command-line front end: argument parsing, run configuration, reports.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cache;
pub mod config;
pub mod output;
pub mod run;
pub mod svg;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use eigenprod_core::ManifoldModel;

use config::{Experiment, RunConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] eigenprod_core::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("replay mismatch: {0}")]
    Replay(String),
}

impl CliError {
    /// 3 for numerical breakdowns and replay mismatches, 2 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_numerical() => 3,
            CliError::Replay(_) => 3,
            _ => 2,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "eigenprod", version, about = "Spectral experiments on products of Laplace eigenfunctions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build and export an eigenbasis.
    Basis(RunArgs),
    /// Expand a product of eigenfunctions.
    Product(RunArgs),
    /// Fit the exponential decay envelope of a product's coefficients.
    Decay(RunArgs),
    /// Smallest spectral window capturing a target share of the norm.
    Truncate(RunArgs),
    /// Fit an exponential lower bound on product norms.
    LowerBound(RunArgs),
    /// Norms of rotated power products on the sphere.
    RemarkS2(RunArgs),
    /// Harmonic extension and coefficient recovery on a flat torus.
    Greens(RunArgs),
    /// Constants of the harmonic extension.
    ExtensionParams(RunArgs),
    /// Sublevel-set measures and the fitted Remez exponent.
    Remez(RunArgs),
    /// Doubling index of a function on a ball.
    Doubling(RunArgs),
    /// Common good set for the factors of a product.
    GoodSet(RunArgs),
    /// Run a configuration file or replay a stored report.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Run configuration (TOML).
    #[arg(long, conflicts_with = "replay", required_unless_present = "replay")]
    pub config: Option<PathBuf>,
    /// Stored JSON report to re-run and compare.
    #[arg(long)]
    pub replay: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Default, Args)]
pub struct RunArgs {
    /// Base configuration (TOML); flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// flat-torus, sphere or rev-torus.
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub period: Option<f64>,
    /// Major radius of the torus of revolution.
    #[arg(long = "R")]
    pub major: Option<f64>,
    /// Minor radius of the torus of revolution.
    #[arg(long = "r")]
    pub minor: Option<f64>,
    #[arg(long)]
    pub lambda_max: Option<f64>,
    #[arg(long)]
    pub lambda_max_mult: Option<f64>,
    #[arg(long)]
    pub grid_exactness: Option<usize>,
    #[arg(long)]
    pub galerkin_n: Option<usize>,
    #[arg(long)]
    pub product_order: Option<usize>,
    /// Comma-separated factor names or ids.
    #[arg(long, value_delimiter = ',')]
    pub factors: Option<Vec<String>>,
    #[arg(long)]
    pub target: Option<f64>,
    #[arg(long)]
    pub c2: Option<f64>,
    /// Fit window `lo,hi`.
    #[arg(long, value_delimiter = ',', num_args = 2)]
    pub window: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub heights: Option<Vec<f64>>,
    #[arg(long)]
    pub cauchy_radius: Option<f64>,
    #[arg(long)]
    pub cauchy_delta: Option<f64>,
    #[arg(long = "R2")]
    pub r2: Option<f64>,
    #[arg(long = "C6")]
    pub c6: Option<f64>,
    #[arg(long = "C7")]
    pub c7: Option<f64>,
    /// Product family `a,b;c,d;...`.
    #[arg(long)]
    pub products: Option<String>,
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long)]
    pub k_min: Option<u32>,
    #[arg(long)]
    pub k_max: Option<u32>,
    #[arg(long)]
    pub exactness: Option<usize>,
    /// linear, re-power:K, mode:NAME or lift:NAME.
    #[arg(long)]
    pub function: Option<String>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub center: Option<Vec<f64>>,
    #[arg(long)]
    pub radius: Option<f64>,
    #[arg(long)]
    pub side: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    pub a_grid: Option<Vec<f64>>,
    #[arg(long)]
    pub noise_floor: Option<f64>,
    #[arg(long)]
    pub bin_width: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub csv: bool,
    #[arg(long)]
    pub svg: bool,
    #[arg(long)]
    pub cache: Option<PathBuf>,
}

fn model_from_args(a: &RunArgs, current: Option<&ManifoldModel>) -> Result<Option<ManifoldModel>, CliError> {
    let kind = match a.model.as_deref() {
        Some(k) => k,
        None => {
            if a.dim.is_some() || a.period.is_some() || a.major.is_some() || a.minor.is_some() {
                return Err(CliError::Config("geometry flags need --model".into()));
            }
            return Ok(current.cloned());
        }
    };
    let m = match kind {
        "flat-torus" => ManifoldModel::flat_torus(a.dim.unwrap_or(1), a.period.unwrap_or(std::f64::consts::TAU))?,
        "sphere" => ManifoldModel::Sphere2,
        "rev-torus" => ManifoldModel::rev_torus(a.major.unwrap_or(2.0), a.minor.unwrap_or(1.0))?,
        other => return Err(CliError::Config(format!("unknown model {other:?}; use flat-torus, sphere or rev-torus"))),
    };
    Ok(Some(m))
}

/// Merge command-line flags over an optional base configuration.
pub fn build_config(exp: Experiment, a: &RunArgs) -> Result<RunConfig, CliError> {
    let mut cfg = match &a.config {
        Some(path) => {
            let c = RunConfig::load(path)?;
            if c.experiment != exp {
                return Err(CliError::Config(format!(
                    "config is for {}, not {}",
                    c.experiment.name(),
                    exp.name()
                )));
            }
            c
        }
        None => RunConfig::new(exp),
    };
    cfg.model = model_from_args(a, cfg.model.as_ref())?;
    let b = &mut cfg.basis;
    b.lambda_max = a.lambda_max.or(b.lambda_max);
    b.lambda_max_mult = a.lambda_max_mult.or(b.lambda_max_mult);
    if let Some(e) = a.grid_exactness {
        b.resolution.grid_exactness = Some(e);
    }
    if let Some(n) = a.galerkin_n {
        b.resolution.galerkin_n = Some(n);
    }
    if let Some(p) = a.product_order {
        b.resolution.product_order = p;
    }
    if let Some(f) = &a.factors {
        cfg.factors = f.iter().map(|s| s.trim().to_string()).collect();
    }
    let p = &mut cfg.params;
    macro_rules! take {
        ($($field:ident),*) => { $( if a.$field.is_some() { p.$field = a.$field.clone(); } )* };
    }
    take!(target, c2, heights, cauchy_radius, cauchy_delta, r2, c6, c7, preset, k_min, k_max, exactness, function, center, radius, side, a_grid);
    if let Some(w) = &a.window {
        p.window = Some([w[0], w[1]]);
    }
    if let Some(s) = &a.products {
        let fam: Vec<Vec<String>> = s
            .split(';')
            .filter(|g| !g.trim().is_empty())
            .map(|g| g.split(',').map(|t| t.trim().to_string()).collect())
            .collect();
        p.products = Some(fam);
    }
    cfg.tolerances.noise_floor = a.noise_floor.or(cfg.tolerances.noise_floor);
    cfg.tolerances.bin_width = a.bin_width.or(cfg.tolerances.bin_width);
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(o) = &a.out {
        cfg.output.dir = o.to_string_lossy().into_owned();
    }
    cfg.output.csv |= a.csv;
    cfg.output.svg |= a.svg;
    if let Some(c) = &a.cache {
        cfg.output.cache = Some(c.to_string_lossy().into_owned());
    }
    Ok(cfg)
}

fn run_and_write(cfg: &RunConfig) -> Result<String, CliError> {
    let outcome = run::execute(cfg)?;
    let written = run::write_outcome(cfg, &outcome, std::path::Path::new(&cfg.output.dir))?;
    eprintln!("wrote {}", written.json.display());
    Ok(outcome.summary)
}

fn dispatch(cmd: Command) -> Result<String, CliError> {
    let (exp, args) = match cmd {
        Command::Basis(a) => (Experiment::Basis, a),
        Command::Product(a) => (Experiment::Product, a),
        Command::Decay(a) => (Experiment::Decay, a),
        Command::Truncate(a) => (Experiment::Truncate, a),
        Command::LowerBound(a) => (Experiment::LowerBound, a),
        Command::RemarkS2(a) => (Experiment::RemarkS2, a),
        Command::Greens(a) => (Experiment::Greens, a),
        Command::ExtensionParams(a) => (Experiment::ExtensionParams, a),
        Command::Remez(a) => (Experiment::Remez, a),
        Command::Doubling(a) => (Experiment::Doubling, a),
        Command::GoodSet(a) => (Experiment::GoodSet, a),
        Command::Report(r) => {
            if let Some(path) = r.replay {
                let text = std::fs::read_to_string(&path)?;
                let report: serde_json::Value =
                    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
                let fresh = run::replay(&report)?;
                return Ok(format!("replay ok: {}", fresh.summary));
            }
            let path = r.config.expect("clap enforces --config or --replay");
            let mut cfg = RunConfig::load(&path)?;
            if let Some(o) = r.out {
                cfg.output.dir = o.to_string_lossy().into_owned();
            }
            return run_and_write(&cfg);
        }
    };
    let cfg = build_config(exp, &args)?;
    run_and_write(&cfg)
}

/// Entry point shared by the binary and the tests; returns the exit code.
pub fn cli_main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(summary) => {
            println!("{summary}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
