mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

/// Exit code for solver runs that stop before converging.
const EXIT_UNCONVERGED: u8 = 3;
const EXIT_INPUT: u8 = 1;

#[derive(Debug, Clone, Parser, Serialize, Deserialize)]
#[command(name = "contestlab", version, about = "Effort allocation, equilibrium and simulation for two-effort contests")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct GlobalArgs {
    /// Scenario JSON file.
    #[arg(long, global = true)]
    pub scenario: Option<PathBuf>,
    /// Output directory; tables, summaries and a manifest are written here.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Type-grid points of the equilibrium solver.
    #[arg(long, global = true)]
    pub grid: Option<usize>,
    /// Convergence tolerance of the equilibrium iteration.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Weight on the new best response in each equilibrium update.
    #[arg(long, global = true)]
    pub damping: Option<f64>,
    /// Iteration cap of the equilibrium solver.
    #[arg(long, global = true)]
    pub max_iter: Option<usize>,
    /// Worker threads (default: available cores).
    #[arg(long, global = true, env = "CONTESTLAB_THREADS")]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Subcommand, Serialize, Deserialize)]
pub enum Command {
    /// Check the scenario against the modelling assumptions.
    Validate {
        /// Grid points per dimension of the checks.
        #[arg(long, default_value_t = 200)]
        resolution: usize,
    },
    /// Least-cost allocation along a fitness grid, per type.
    Cost {
        /// Types to tabulate (default: five interior types of the support).
        #[arg(long, value_delimiter = ',')]
        theta: Vec<f64>,
        #[arg(long, default_value_t = 4.0)]
        mu_max: f64,
        #[arg(long, default_value_t = 201)]
        points: usize,
    },
    /// Single-agent baseline on a type grid, with thresholds.
    Baseline {
        #[arg(long, default_value_t = 201)]
        points: usize,
    },
    /// Symmetric monotone equilibrium profile.
    Equilibrium {
        /// Prize vector overriding the scenario's, e.g. `3,1,0`.
        #[arg(long, value_delimiter = ',')]
        prizes: Option<Vec<f64>>,
    },
    /// Per-type hacking verdicts and the hacking threshold.
    Hacking {
        #[arg(long, value_delimiter = ',')]
        prizes: Option<Vec<f64>>,
        /// Classify even if the equilibrium did not converge.
        #[arg(long)]
        force: bool,
    },
    /// Equilibria across prize vectors totally ordered by skewness.
    Sweep {
        /// One prize vector per flag, e.g. `--prizes 1,0,0 --prizes 2,0,0`.
        #[arg(long = "prizes", required = true)]
        prizes: Vec<String>,
        /// Slack on the monotonicity checks.
        #[arg(long, default_value_t = 1e-4)]
        tolerance: f64,
    },
    /// Synthetic pipeline: equilibria per prize design, contests, submission
    /// trajectories and the panel regressions.
    Simulate {
        /// Pipeline configuration JSON (default: built-in designs).
        #[arg(long)]
        pipeline: Option<PathBuf>,
        /// Overrides the number of contests.
        #[arg(long)]
        contests: Option<usize>,
    },
    /// Mann-Kendall statistic of one CSV column.
    Mk {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        column: String,
    },
    /// Fixed-effects OLS on a panel CSV.
    Regress {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        outcome: String,
        #[arg(long, value_delimiter = ',')]
        regressors: Vec<String>,
        #[arg(long, default_value = "contest_id")]
        group: String,
        /// Categorical column expanded into `T{level}` dummies, lowest level omitted.
        #[arg(long)]
        dummies: Option<String>,
        /// Columns interacted with every dummy.
        #[arg(long, value_delimiter = ',')]
        interact: Vec<String>,
    },
    /// Closed-form checks of the four built-in examples.
    Examples,
    /// Re-run the command recorded in a manifest.
    Replay { manifest: PathBuf },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Validate { .. } => "validate",
            Command::Cost { .. } => "cost",
            Command::Baseline { .. } => "baseline",
            Command::Equilibrium { .. } => "equilibrium",
            Command::Hacking { .. } => "hacking",
            Command::Sweep { .. } => "sweep",
            Command::Simulate { .. } => "simulate",
            Command::Mk { .. } => "mk",
            Command::Regress { .. } => "regress",
            Command::Examples => "examples",
            Command::Replay { .. } => "replay",
        }
    }
}

/// Raised when a solver stops short of its tolerance.
#[derive(Debug, thiserror::Error)]
#[error("{what} did not converge (residual {residual:.3e})")]
pub struct Unconverged {
    pub what: String,
    pub residual: f64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.global.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_INPUT);
        }
    }
    match commands::dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<Unconverged>().is_some() {
                ExitCode::from(EXIT_UNCONVERGED)
            } else {
                ExitCode::from(EXIT_INPUT)
            }
        }
    }
}
