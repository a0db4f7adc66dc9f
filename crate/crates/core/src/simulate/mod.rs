//! Monte Carlo contests, synthetic submission trajectories, Mann-Kendall
//! statistics and fixed-effects regressions on simulated panels.

mod contest;
mod mann_kendall;
mod ols;
mod pipeline;
mod rng;
mod trajectory;

pub use contest::{run_contest, run_contests, run_replication, ContestOutcome, PlayerRecord};
pub use mann_kendall::{mann_kendall, MannKendall};
pub use ols::{fe_ols, PanelData, PanelSpec, RegressionResult};
pub use pipeline::{
    panel_data, panel_regressions, run_pipeline, simulate_contests, simulate_panel, solve_designs, PanelRecord, PipelineClaims, PipelineConfig, PipelineOutput,
    PipelineRegressions, PrizeDesign,
};
pub use rng::replication_rng;
pub use trajectory::{gen_trajectory, trajectory_from_rng, SubmissionTrajectory, TrajectoryParams};

use thiserror::Error;

use crate::costmin::CostError;
use crate::equilibrium::EquilibriumError;
use crate::model::ModelError;

#[derive(Debug, Error)]
pub enum SimulateError {
    #[error("a series needs at least two points, got {0}")]
    TooShort(usize),

    #[error("{0}")]
    Input(String),

    #[error("the strategy profile did not converge")]
    Unconverged,

    #[error("design matrix is rank deficient after demeaning; collinear columns: {}", .0.join(", "))]
    RankDeficient(Vec<String>),

    #[error(transparent)]
    Cost(#[from] CostError),

    #[error(transparent)]
    Equilibrium(#[from] EquilibriumError),

    #[error(transparent)]
    Model(#[from] ModelError),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
