use contestlab::equilibrium::{solve_equilibrium, type_grid, Contest, SolverOptions, StrategyProfile};
use contestlab::model::{Example, FormSpec, PrizeVector, Registry, Scenario};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use statrs::distribution::{ContinuousCDF, Normal};

const DRAWS: usize = 1_000_000;

fn three_player_example() -> (Scenario, StrategyProfile) {
    let s = Example::PerfectSubstitutes
        .scenario()
        .with_prizes(PrizeVector::new(vec![2.0, 1.0, 0.0]).unwrap());
    let grid = type_grid(&s, 201);
    let mu = grid.iter().map(|t| 0.5 + 0.5 * t * t).collect();
    (s, StrategyProfile::fixed(grid, mu))
}

/// Rank frequencies of a player with fitness `mu` against two opponents
/// with uniform types on [0, 3] playing the profile, standard normal noise.
fn simulated_ranks(profile: &StrategyProfile, mu: f64, seed: u64) -> [f64; 3] {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = [0usize; 3];
    for _ in 0..DRAWS {
        let own = mu + rng.sample::<f64, _>(StandardNormal);
        let mut beaten_by = 0;
        for _ in 0..2 {
            let theta = rng.random_range(0.0..3.0);
            let other = profile.mu_at(theta) + rng.sample::<f64, _>(StandardNormal);
            if other > own {
                beaten_by += 1;
            }
        }
        counts[beaten_by] += 1;
    }
    counts.map(|c| c as f64 / DRAWS as f64)
}

#[test]
fn rank_probabilities_match_monte_carlo() {
    let (s, profile) = three_player_example();
    let contest = Contest::new(&s, &profile, &SolverOptions::default());
    for (k, mu) in [0.3, 1.5, 3.0, 5.0].into_iter().enumerate() {
        let exact = contest.rank_probabilities(mu).unwrap();
        let freq = simulated_ranks(&profile, mu, 17 + k as u64);
        for (r, &p) in exact.p.iter().enumerate() {
            let se = (p * (1.0 - p) / DRAWS as f64).sqrt().max(1e-6);
            let gap = (freq[r] - p).abs();
            assert!(gap <= 0.005, "mu={mu} rank {}: {} vs {}", r + 1, freq[r], p);
            assert!(gap <= 3.0 * se, "mu={mu} rank {}: {} vs {} (se {se})", r + 1, freq[r], p);
        }
    }
}

/// Two types with equal mass, two players, one unit prize, standard normal
/// noise, Example 1 primitives. The performance gap of two players is
/// normal with variance 2, so the winning probability is analytic.
struct TwoPointGame {
    types: [f64; 2],
    std_gap: Normal,
}

impl TwoPointGame {
    fn new() -> Self {
        Self {
            types: [0.5, 2.0],
            std_gap: Normal::new(0.0, 2f64.sqrt()).unwrap(),
        }
    }

    fn cost(&self, mu: f64, theta: f64) -> f64 {
        let per_unit = theta.max(1.0);
        0.5 * (mu / per_unit).powi(2)
    }

    fn payoff(&self, mu: f64, theta: f64, profile: [f64; 2]) -> f64 {
        let win: f64 = profile.iter().map(|&m| 0.5 * self.std_gap.cdf(mu - m)).sum();
        win + mu - self.cost(mu, theta)
    }

    /// Symmetric pure equilibria on a fitness grid: profiles `(μ_L, μ_H)`
    /// from which neither type gains by moving to another grid point.
    fn grid_equilibria(&self, grid: &[f64]) -> Vec<[f64; 2]> {
        let mut out = Vec::new();
        for &ml in grid {
            for &mh in grid {
                let profile = [ml, mh];
                let stable = (0..2).all(|k| {
                    let own = self.payoff(profile[k], self.types[k], profile);
                    grid.iter().all(|&m| self.payoff(m, self.types[k], profile) <= own + 1e-12)
                });
                if stable {
                    out.push(profile);
                }
            }
        }
        out
    }
}

#[test]
fn discrete_type_equilibrium_matches_enumeration() {
    let game = TwoPointGame::new();
    let spec = FormSpec::new("discrete").with("atoms", serde_json::json!([[0.5, 0.5], [2.0, 0.5]]));
    let s = Example::PerfectSubstitutes
        .scenario()
        .with_types(spec, &Registry::builtin())
        .unwrap();
    let p = solve_equilibrium(&s, &SolverOptions::default()).unwrap();
    assert!(p.converged);
    let solved = [p.mu_star[0], p.mu_star[1]];

    // Each solved fitness is a best response against the analytic payoff.
    for k in 0..2 {
        let own = game.payoff(solved[k], game.types[k], solved);
        let best = (0..=60_000)
            .map(|i| i as f64 * 1e-4)
            .fold(f64::NEG_INFINITY, |acc, m| acc.max(game.payoff(m, game.types[k], solved)));
        assert!(own >= best - 1e-7, "type {}: {own} vs {best}", game.types[k]);
    }

    let step = 6.0 / 49.0;
    let grid: Vec<f64> = (0..50).map(|i| i as f64 * step).collect();
    let eqs = game.grid_equilibria(&grid);
    assert!(!eqs.is_empty());
    let near = eqs
        .iter()
        .any(|e| (e[0] - solved[0]).abs() <= step && (e[1] - solved[1]).abs() <= step);
    assert!(near, "solver {solved:?}, grid equilibria {eqs:?}");
}
