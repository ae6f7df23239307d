//! Command-line entry point for the lifespan experiments.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "lifespan", version, about = "Small-data blow-up experiments for critical homogeneous NLS")]
pub struct Cli {
    /// Run configuration (TOML or JSON).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Output directory; overrides the configured one.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Reserved; every computation is currently deterministic.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum EngineArg {
    Pde,
    Ode,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    PowerLog,
    LogCorrected,
    PowerTail,
    ExponentialTail,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Fourier coefficients of a nonlinearity symbol.
    Decompose {
        /// Named symbol (constant, gauge, mixed:g0,g1, exp_cos, abs_cos, square); defaults to the config's.
        #[arg(long)]
        symbol: Option<String>,
        #[arg(long, default_value_t = 1)]
        dim: usize,
        #[arg(long, default_value_t = 64)]
        order: usize,
        #[arg(long, default_value_t = 1024)]
        points: usize,
        #[arg(long, default_value_t = 1e-10)]
        parseval_tolerance: f64,
    },
    /// Pairing integrals against the three-case lower bound.
    Lemma1 {
        #[arg(long, value_delimiter = ',', default_values_t = vec![0.0, 1.0, 2.0])]
        alpha: Vec<f64>,
        #[arg(long, default_value_t = 1.5)]
        r0: f64,
        #[arg(long, default_value_t = 1)]
        dim: usize,
        #[arg(long, default_value_t = 1e6)]
        r_max: f64,
        #[arg(long, default_value_t = 25)]
        points: usize,
        /// Largest admissible max/min spread of integral over growth.
        #[arg(long, default_value_t = 4.0)]
        spread: f64,
    },
    /// One PDE run at the configured amplitude.
    Simulate {
        #[arg(long)]
        epsilon: Option<f64>,
    },
    /// Amplitude sweep through the PDE solver or the ODE model.
    Sweep {
        #[arg(long, value_enum)]
        engine: EngineArg,
    },
    /// Scaling fit of a lifespan table written by `sweep`.
    Fit {
        /// `table.json` from a sweep; defaults to `<out>/table.json`.
        #[arg(long)]
        table: Option<PathBuf>,
        #[arg(long, value_enum)]
        model: Option<ModelArg>,
    },
    /// Weak-form residual of a run, with one refinement step.
    VerifyWeak {
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long, default_value_t = 1e-4)]
        max_residual: f64,
        /// Skip the refined run.
        #[arg(long)]
        no_refine: bool,
    },
    /// Assembles CSV, JSON, SVG and markdown from sweep tables.
    Report {
        /// `table.json` files; defaults to `<out>/table.json`.
        #[arg(long = "table")]
        tables: Vec<PathBuf>,
        #[arg(long)]
        title: Option<String>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::dispatch(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
