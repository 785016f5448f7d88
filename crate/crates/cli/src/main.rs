mod commands;
mod config;

use std::process::ExitCode;

use clap::{Parser, Subcommand};
use thiserror::Error;

use config::{Common, ParamFlags};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) | CliError::Io(_) => 3,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "fhn-cusp", version, about = "Cusped singularities of two repulsively coupled FitzHugh-Nagumo units")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrate the full system and write time series
    Simulate {
        #[command(flatten)]
        params: ParamFlags,
        #[arg(long)]
        horizon: Option<f64>,
        /// Initial state v1,v2,w1,w2 (default: a point of the attracting sheet)
        #[arg(long, allow_hyphen_values = true)]
        init: Option<String>,
    },
    /// Count SAOs along a grid of c (or c2) values
    Sao {
        #[command(flatten)]
        params: ParamFlags,
        #[arg(long, allow_hyphen_values = true, conflicts_with = "c2_grid")]
        c_grid: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        c2_grid: Option<String>,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long)]
        z_guard: Option<f64>,
    },
    /// Fit exit amplitudes against eps at fixed c
    Scaling {
        #[command(flatten)]
        params: ParamFlags,
        #[arg(long)]
        eps_grid: Option<String>,
        #[arg(long)]
        delta: Option<f64>,
    },
    /// Singularities, bifurcation diagram and a seeded check of the fold identity
    Geometry {
        #[command(flatten)]
        params: ParamFlags,
        #[arg(long, allow_hyphen_values = true)]
        c_grid: Option<String>,
        /// Random points for the discriminant identity check
        #[arg(long, default_value_t = 1000)]
        samples: usize,
    },
    /// Averaged curve and exit-point curve
    Cycles {
        #[command(flatten)]
        params: ParamFlags,
        #[arg(long, allow_hyphen_values = true)]
        y2_grid: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        c2_grid: Option<String>,
    },
    /// Zero counts of the growing Weber solution
    Weber {
        /// Eigenvalue ratios, e.g. 0.5 4.06 or 0.5,4.06
        mu: Vec<String>,
        /// Half-width of the integration window
        #[arg(long)]
        l: Option<f64>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    let file = match &cli.common.config {
        Some(path) => config::FileConfig::load(path)?,
        None => Default::default(),
    };
    if let Some(n) = cli.common.threads.or(file.threads) {
        if n == 0 {
            return Err(CliError::Config("threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| CliError::Config(e.to_string()))?;
    }
    let c = &cli.common;
    match cli.command {
        Command::Simulate { params, horizon, init } => commands::simulate(c, &params, &file, horizon, init.as_deref()),
        Command::Sao { params, c_grid, c2_grid, delta, z_guard } => commands::sao(c, &params, &file, c_grid.as_deref(), c2_grid.as_deref(), delta, z_guard),
        Command::Scaling { params, eps_grid, delta } => commands::scaling(c, &params, &file, eps_grid.as_deref(), delta),
        Command::Geometry { params, c_grid, samples } => commands::geometry(c, &params, &file, c_grid.as_deref(), samples),
        Command::Cycles { params, y2_grid, c2_grid } => commands::cycles(c, &params, &file, y2_grid.as_deref(), c2_grid.as_deref()),
        Command::Weber { mu, l } => commands::weber(c, &file, &mu, l),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("fhn-cusp: {e}");
            ExitCode::from(e.code())
        }
    }
}
