//! Monte Carlo contests under a symmetric strategy profile.

use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::rng::replication_rng;
use super::SimulateError;
use crate::costmin::optimal_allocation;
use crate::equilibrium::StrategyProfile;
use crate::model::Scenario;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlayerRecord {
    pub player: usize,
    pub theta: f64,
    pub a: f64,
    pub b: f64,
    pub mu: f64,
    pub performance: f64,
    /// 1 is the top rank.
    pub rank: usize,
    pub prize: f64,
    /// `c(a + b)`.
    pub cost: f64,
    /// `prize + performance − cost`.
    pub payoff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContestOutcome {
    pub scenario: String,
    pub seed: u64,
    pub replication: u64,
    pub records: Vec<PlayerRecord>,
}

/// One contest on stream 0 of `seed`.
pub fn run_contest(s: &Scenario, profile: &StrategyProfile, seed: u64) -> Result<ContestOutcome, SimulateError> {
    run_replication(s, profile, seed, 0)
}

pub fn run_replication(
    s: &Scenario,
    profile: &StrategyProfile,
    seed: u64,
    replication: u64,
) -> Result<ContestOutcome, SimulateError> {
    if !profile.converged {
        return Err(SimulateError::Unconverged);
    }
    let mut rng = replication_rng(seed, replication);
    let records = play(s, profile, &mut rng)?;
    Ok(ContestOutcome {
        scenario: s.name().to_string(),
        seed,
        replication,
        records,
    })
}

/// Draws types, plays `μ*(θ)` with least-cost efforts, draws performances
/// and pays prizes by rank.
pub(crate) fn play(
    s: &Scenario,
    profile: &StrategyProfile,
    rng: &mut dyn RngCore,
) -> Result<Vec<PlayerRecord>, SimulateError> {
    let players = s.players();
    let mut records = Vec::with_capacity(players);
    for player in 0..players {
        let theta = s.types().sample(rng);
        let point = optimal_allocation(s, profile.mu_at(theta), theta)?;
        let performance = s.noise().sample(rng, point.mu);
        let alloc = point.allocation;
        records.push(PlayerRecord {
            player,
            theta,
            a: alloc.a,
            b: alloc.b,
            mu: point.mu,
            performance,
            rank: 0,
            prize: 0.0,
            cost: s.cost().value(alloc.a + alloc.b),
            payoff: 0.0,
        });
    }
    let mut order: Vec<usize> = (0..players).collect();
    order.sort_by(|&i, &j| records[j].performance.total_cmp(&records[i].performance).then(i.cmp(&j)));
    let prizes = s.prizes().as_slice();
    for (k, &i) in order.iter().enumerate() {
        let r = &mut records[i];
        r.rank = k + 1;
        r.prize = prizes[k];
        r.payoff = r.prize + r.performance - r.cost;
    }
    Ok(records)
}

/// `n` independent contests, replication `r` on stream `r` of `seed`.
/// Output order is the replication order whatever the thread count.
pub fn run_contests(
    s: &Scenario,
    profile: &StrategyProfile,
    n: u64,
    seed: u64,
) -> Result<Vec<ContestOutcome>, SimulateError> {
    (0..n)
        .into_par_iter()
        .map(|r| run_replication(s, profile, seed, r))
        .collect()
}
