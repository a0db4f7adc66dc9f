//! Synthetic empirical pipeline: equilibria for a menu of prize designs,
//! many contests under them, one submission trajectory per player, and the
//! four panel regressions (fitness and Mann-Kendall Z on type dummies, each
//! with and without type × prize-value and type × prize-skew interactions).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::contest::{play, ContestOutcome};
use super::ols::{fe_ols, PanelData, PanelSpec, RegressionResult};
use super::rng::replication_rng;
use super::trajectory::{trajectory_from_rng, TrajectoryParams};
use super::SimulateError;
use crate::equilibrium::{solve_equilibrium, SolverOptions, StrategyProfile};
use crate::model::{PrizeVector, Scenario};

/// A prize budget split over the top `count` ranks with linearly declining
/// shares `count, count − 1, …, 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrizeDesign {
    pub total: f64,
    pub count: usize,
}

impl PrizeDesign {
    pub fn prizes(&self, players: usize) -> Result<PrizeVector, SimulateError> {
        if self.count == 0 || self.count > players {
            return Err(SimulateError::Input(format!(
                "a design with {} prizes does not fit {players} players",
                self.count
            )));
        }
        let weight_sum = (self.count * (self.count + 1)) as f64 / 2.0;
        let r = (0..players)
            .map(|k| {
                if k < self.count {
                    self.total * (self.count - k) as f64 / weight_sum
                } else {
                    0.0
                }
            })
            .collect();
        PrizeVector::new(r).map_err(SimulateError::from)
    }

    /// 1 when at most three ranks are paid.
    pub fn skew(&self) -> f64 {
        if self.count <= 3 {
            1.0
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub contests: usize,
    pub players: usize,
    /// Number of equal-width type categories over the type support.
    pub type_levels: usize,
    /// Contest `j` uses design `j mod designs.len()`.
    pub designs: Vec<PrizeDesign>,
    pub trajectory: TrajectoryParams,
    /// Outcome column of the two fitness regressions: `mu` (fitness itself)
    /// or `score_final` (realized performance).
    pub fitness_column: String,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let mut designs = Vec::new();
        for total in [20.0, 40.0, 60.0] {
            for count in [1, 3, 20, 50] {
                designs.push(PrizeDesign { total, count });
            }
        }
        Self {
            contests: 500,
            players: 200,
            type_levels: 4,
            designs,
            trajectory: TrajectoryParams {
                noise: 8.0,
                ..TrajectoryParams::default()
            },
            fitness_column: "mu".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PanelRecord {
    pub contest_id: u64,
    pub player_id: u64,
    /// Type category, 0 is the lowest.
    #[serde(rename = "type")]
    pub type_level: i64,
    pub a: f64,
    pub b: f64,
    pub mu: f64,
    /// Realized contest performance.
    pub score_final: f64,
    #[serde(rename = "mk_S")]
    pub mk_s: i64,
    #[serde(rename = "mk_Z")]
    pub mk_z: f64,
    pub prize_value: f64,
    pub prize_skew: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineRegressions {
    pub fitness: RegressionResult,
    pub fitness_prize: RegressionResult,
    pub mk: RegressionResult,
    pub mk_prize: RegressionResult,
}

/// Sign and ordering checks on the regressions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineClaims {
    /// Type-dummy coefficients on final fitness are positive and strictly
    /// increasing in the type level.
    pub fitness_increasing: bool,
    /// Same for Mann-Kendall Z.
    pub mk_increasing: bool,
    /// Every type × prize-value and type × prize-skew coefficient is
    /// positive, in both the fitness and the Mann-Kendall regression.
    pub interactions_positive: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineOutput {
    pub seed: u64,
    pub regressions: PipelineRegressions,
    pub claims: PipelineClaims,
}

/// One equilibrium per prize design, all with `config.players` players.
pub fn solve_designs(
    s: &Scenario,
    config: &PipelineConfig,
    options: &SolverOptions,
) -> Result<Vec<StrategyProfile>, SimulateError> {
    config
        .designs
        .iter()
        .map(|d| {
            let scenario = s.with_prizes(d.prizes(config.players)?);
            let profile = solve_equilibrium(&scenario, options)?;
            if !profile.converged {
                return Err(SimulateError::Unconverged);
            }
            Ok(profile)
        })
        .collect()
}

fn type_level(s: &Scenario, theta: f64, levels: usize) -> i64 {
    let (lo, hi) = s.type_support();
    let x = ((theta - lo) / (hi - lo) * levels as f64).floor();
    x.clamp(0.0, (levels - 1) as f64) as i64
}

/// Simulates the contests and the panel; contest `j` draws from stream `j`
/// of `seed`.
pub fn simulate_contests(
    s: &Scenario,
    config: &PipelineConfig,
    profiles: &[StrategyProfile],
    seed: u64,
) -> Result<(Vec<ContestOutcome>, Vec<PanelRecord>), SimulateError> {
    if profiles.len() != config.designs.len() || config.designs.is_empty() {
        return Err(SimulateError::Input("one profile per prize design is required".into()));
    }
    if config.type_levels < 2 {
        return Err(SimulateError::Input("at least two type levels are required".into()));
    }
    let scenarios: Vec<Scenario> = config
        .designs
        .iter()
        .map(|d| d.prizes(config.players).map(|r| s.with_prizes(r)))
        .collect::<Result<_, _>>()?;
    let per_contest: Vec<(ContestOutcome, Vec<PanelRecord>)> = (0..config.contests as u64)
        .into_par_iter()
        .map(|j| {
            let d = (j as usize) % config.designs.len();
            let design = config.designs[d];
            let mut rng = replication_rng(seed, j);
            let records = play(&scenarios[d], &profiles[d], &mut rng)?;
            let panel = records
                .iter()
                .map(|r| {
                    let traj = trajectory_from_rng(r.player as u64, r.a, r.b, &config.trajectory, &mut rng)?;
                    Ok(PanelRecord {
                        contest_id: j,
                        player_id: r.player as u64,
                        type_level: type_level(s, r.theta, config.type_levels),
                        a: r.a,
                        b: r.b,
                        mu: r.mu,
                        score_final: r.performance,
                        mk_s: traj.mk_s,
                        mk_z: traj.mk_z,
                        prize_value: design.total,
                        prize_skew: design.skew(),
                    })
                })
                .collect::<Result<Vec<_>, SimulateError>>()?;
            let outcome = ContestOutcome {
                scenario: s.name().to_string(),
                seed,
                replication: j,
                records,
            };
            Ok((outcome, panel))
        })
        .collect::<Result<_, SimulateError>>()?;
    let (outcomes, panels): (Vec<_>, Vec<_>) = per_contest.into_iter().unzip();
    Ok((outcomes, panels.into_iter().flatten().collect()))
}

pub fn simulate_panel(
    s: &Scenario,
    config: &PipelineConfig,
    profiles: &[StrategyProfile],
    seed: u64,
) -> Result<Vec<PanelRecord>, SimulateError> {
    simulate_contests(s, config, profiles, seed).map(|r| r.1)
}

/// Panel columns as a regression data set.
pub fn panel_data(records: &[PanelRecord]) -> Result<PanelData, SimulateError> {
    let mut d = PanelData::new();
    let col = |f: fn(&PanelRecord) -> f64| records.iter().map(f).collect::<Vec<f64>>();
    d.insert("contest_id", col(|r| r.contest_id as f64))?;
    d.insert("player_id", col(|r| r.player_id as f64))?;
    d.insert("type", col(|r| r.type_level as f64))?;
    d.insert("a", col(|r| r.a))?;
    d.insert("b", col(|r| r.b))?;
    d.insert("mu", col(|r| r.mu))?;
    d.insert("score_final", col(|r| r.score_final))?;
    d.insert("mk_S", col(|r| r.mk_s as f64))?;
    d.insert("mk_Z", col(|r| r.mk_z))?;
    d.insert("prize_value", col(|r| r.prize_value))?;
    d.insert("prize_skew", col(|r| r.prize_skew))?;
    Ok(d)
}

/// The four regressions with contest fixed effects. Type level 0 is the
/// omitted category for both the dummies and the interactions.
pub fn panel_regressions(
    data: &mut PanelData,
    type_levels: usize,
    fitness_column: &str,
) -> Result<PipelineRegressions, SimulateError> {
    let levels: Vec<i64> = (1..type_levels as i64).collect();
    let dummies = data.add_dummies("type", &levels, "T")?;
    let mut interactions = Vec::new();
    for d in &dummies {
        interactions.push(data.add_interaction(d, "prize_value")?);
    }
    for d in &dummies {
        interactions.push(data.add_interaction(d, "prize_skew")?);
    }
    let with_interactions: Vec<String> = dummies.iter().chain(&interactions).cloned().collect();
    let spec = |outcome: &str, regressors: &[String]| PanelSpec {
        outcome: outcome.into(),
        regressors: regressors.to_vec(),
        group: "contest_id".into(),
    };
    Ok(PipelineRegressions {
        fitness: fe_ols(data, &spec(fitness_column, &dummies))?,
        fitness_prize: fe_ols(data, &spec(fitness_column, &with_interactions))?,
        mk: fe_ols(data, &spec("mk_Z", &dummies))?,
        mk_prize: fe_ols(data, &spec("mk_Z", &with_interactions))?,
    })
}

impl PipelineClaims {
    pub fn evaluate(r: &PipelineRegressions) -> Self {
        let increasing = |c: &[f64]| c.first().is_some_and(|&x| x > 0.0) && c.windows(2).all(|w| w[1] > w[0]);
        let interactions = |res: &RegressionResult| {
            res.regressors
                .iter()
                .zip(&res.coefficients)
                .filter(|(name, _)| name.contains("_x_"))
                .all(|(_, &c)| c > 0.0)
        };
        Self {
            fitness_increasing: increasing(&r.fitness.coefficients),
            mk_increasing: increasing(&r.mk.coefficients),
            interactions_positive: interactions(&r.fitness_prize) && interactions(&r.mk_prize),
        }
    }
}

/// Panel plus regressions for one seed, reusing pre-solved equilibria.
pub fn run_pipeline(
    s: &Scenario,
    config: &PipelineConfig,
    profiles: &[StrategyProfile],
    seed: u64,
) -> Result<(Vec<PanelRecord>, PipelineOutput), SimulateError> {
    let panel = simulate_panel(s, config, profiles, seed)?;
    let mut data = panel_data(&panel)?;
    let regressions = panel_regressions(&mut data, config.type_levels, &config.fitness_column)?;
    let claims = PipelineClaims::evaluate(&regressions);
    Ok((
        panel,
        PipelineOutput {
            seed,
            regressions,
            claims,
        },
    ))
}
