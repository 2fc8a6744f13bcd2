mod config;
mod run;

use clap::{Args, Parser, Subcommand};
use config::{parse_list, parse_region, ConfigError, RunConfig};
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(
    name = "wkblab",
    version,
    about = "Complex WKB lab for y'' = λ² q(x) y"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Stokes graph of q.
    Graph,
    /// Eigenvalue table up to --lambda-max.
    Spectrum,
    /// Complex zeros of one eigenfunction and their comparison with the
    /// predicted zero lines.
    Zeros,
    /// Subsequence densities for a non-symmetric double well.
    Density,
    /// Move one root of a quartic until α₁/α₂ hits a target.
    Calibrate,
}

#[derive(Args, Debug, Default)]
struct Common {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Real coefficients of q, ascending.
    #[arg(long, global = true, value_parser = parse_list, allow_hyphen_values = true)]
    coeffs: Option<std::vec::Vec<f64>>,
    #[arg(long = "lambda-max", global = true)]
    lambda_max: Option<f64>,
    /// Search rectangle x0,x1,y0,y1.
    #[arg(long, global = true, value_parser = parse_region, allow_hyphen_values = true)]
    region: Option<[f64; 4]>,
    #[arg(long, global = true)]
    family: Option<String>,
    /// Eigenvalue index for `zeros`.
    #[arg(long, global = true)]
    n: Option<usize>,
    #[arg(long, global = true)]
    delta: Option<f64>,
    #[arg(long, global = true)]
    count: Option<usize>,
    /// Target α₁/α₂ for `calibrate` and `density`.
    #[arg(long, global = true)]
    ratio: Option<f64>,
    #[arg(long = "trace-tol", global = true)]
    trace_tol: Option<f64>,
    #[arg(long = "newton-tol", global = true)]
    newton_tol: Option<f64>,
    #[arg(long = "pitch-factor", global = true)]
    pitch_factor: Option<f64>,
}

/// Failure classes mapped onto exit statuses.
pub enum Failure {
    Config(String),
    Numerical(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.0)
    }
}

impl From<wkblab::Error> for Failure {
    fn from(e: wkblab::Error) -> Self {
        Failure::Numerical(e.to_string())
    }
}

fn load(common: &Common, cmd: Command) -> Result<RunConfig, Failure> {
    let mut cfg = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
            RunConfig::from_toml(&text)?
        }
        None => RunConfig::default(),
    };
    if let Some(c) = &common.coeffs {
        cfg.potential = config::PotentialSpec {
            coefficients: Some(c.clone()),
            ..Default::default()
        };
    }
    if let Some(o) = &common.out {
        cfg.out = Some(o.to_string_lossy().into_owned());
    }
    if common.lambda_max.is_some() {
        cfg.spectrum.lambda_max = common.lambda_max;
    }
    if common.region.is_some() {
        cfg.zeros.region = common.region;
    }
    if common.family.is_some() {
        cfg.zeros.family = common.family.clone();
    }
    if common.n.is_some() {
        cfg.zeros.n = common.n;
    }
    if common.delta.is_some() {
        cfg.density.delta = common.delta;
    }
    if common.count.is_some() {
        cfg.density.count = common.count;
    }
    if common.ratio.is_some() {
        match cmd {
            Command::Calibrate => cfg.calibrate.target = common.ratio,
            _ => cfg.density.ratio = common.ratio,
        }
    }
    if common.trace_tol.is_some() {
        cfg.tolerances.trace_tol = common.trace_tol;
    }
    if common.newton_tol.is_some() {
        cfg.tolerances.newton_tol = common.newton_tol;
    }
    if common.pitch_factor.is_some() {
        cfg.tolerances.pitch_factor = common.pitch_factor;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = load(&cli.common, cli.command).and_then(|cfg| match cli.command {
        Command::Graph => run::graph(&cfg),
        Command::Spectrum => run::spectrum(&cfg),
        Command::Zeros => run::zeros(&cfg),
        Command::Density => run::density(&cfg),
        Command::Calibrate => run::calibrate(&cfg),
    });
    match result {
        Ok(lines) => {
            let mut out = std::io::stdout().lock();
            for l in lines {
                if writeln!(out, "{l}").is_err() {
                    break;
                }
            }
            ExitCode::SUCCESS
        }
        Err(Failure::Config(m)) => {
            eprintln!("config error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Numerical(m)) => {
            eprintln!("numerical failure: {m}");
            ExitCode::from(3)
        }
    }
}
