//! Synthetic submission trajectories.
//!
//! Creative effort shows up as drift and mechanistic effort as noise:
//! `score_t = base + drift·share·t + noise·(1 − share)·ε_t`, clamped to
//! `[0, 100]`, where `share = a/(a+b)` and `ε_t` is standard normal.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::mann_kendall::mann_kendall;
use super::rng::replication_rng;
use super::SimulateError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrajectoryParams {
    /// Submissions per player.
    pub length: usize,
    /// Points per submission at a fully creative allocation.
    pub drift: f64,
    /// Noise scale at a fully mechanistic allocation.
    pub noise: f64,
    pub base: f64,
}

impl Default for TrajectoryParams {
    fn default() -> Self {
        Self {
            length: 20,
            drift: 0.3,
            noise: 2.0,
            base: 50.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubmissionTrajectory {
    pub player: u64,
    pub scores: Vec<f64>,
    pub mk_s: i64,
    pub mk_z: f64,
}

/// Trajectory drawn from the stream `(seed, player)`.
pub fn gen_trajectory(
    player: u64,
    a: f64,
    b: f64,
    params: &TrajectoryParams,
    seed: u64,
) -> Result<SubmissionTrajectory, SimulateError> {
    trajectory_from_rng(player, a, b, params, &mut replication_rng(seed, player))
}

pub fn trajectory_from_rng<R: Rng + ?Sized>(
    player: u64,
    a: f64,
    b: f64,
    params: &TrajectoryParams,
    rng: &mut R,
) -> Result<SubmissionTrajectory, SimulateError> {
    if params.length < 2 {
        return Err(SimulateError::TooShort(params.length));
    }
    if !(a >= 0.0 && b >= 0.0) {
        return Err(SimulateError::Input(format!("efforts must be non-negative, got a={a}, b={b}")));
    }
    let total = a + b;
    let scores: Vec<f64> = if total == 0.0 {
        vec![params.base.clamp(0.0, 100.0); params.length]
    } else {
        let share = a / total;
        (0..params.length)
            .map(|t| {
                let eps: f64 = rng.sample(StandardNormal);
                let raw = params.base + params.drift * share * t as f64 + params.noise * (b / total) * eps;
                raw.clamp(0.0, 100.0)
            })
            .collect()
    };
    let mk = mann_kendall(&scores)?;
    Ok(SubmissionTrajectory {
        player,
        scores,
        mk_s: mk.s,
        mk_z: mk.z,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn creative_only_is_strictly_increasing() {
        let t = gen_trajectory(0, 1.0, 0.0, &TrajectoryParams::default(), 1).unwrap();
        assert!(t.scores.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(t.mk_s, 190);
    }

    #[test]
    fn no_effort_is_flat() {
        let t = gen_trajectory(0, 0.0, 0.0, &TrajectoryParams::default(), 1).unwrap();
        assert!(t.scores.iter().all(|&s| s == 50.0));
        assert_eq!((t.mk_s, t.mk_z), (0, 0.0));
    }

    #[test]
    fn deterministic_per_seed_and_clamped() {
        let p = TrajectoryParams {
            base: 99.0,
            noise: 50.0,
            ..TrajectoryParams::default()
        };
        let a = gen_trajectory(3, 0.2, 1.0, &p, 9).unwrap();
        assert_eq!(a, gen_trajectory(3, 0.2, 1.0, &p, 9).unwrap());
        assert!(a.scores.iter().all(|s| (0.0..=100.0).contains(s)));
    }

    #[test]
    fn rejects_bad_input() {
        let short = TrajectoryParams {
            length: 1,
            ..TrajectoryParams::default()
        };
        assert!(gen_trajectory(0, 1.0, 1.0, &short, 0).is_err());
        assert!(gen_trajectory(0, -1.0, 1.0, &TrajectoryParams::default(), 0).is_err());
    }
}
