//! Symmetric monotone equilibrium of the fitness-choice game.
//!
//! Each player picks a fitness `μ` to maximize `g(μ) + μ − C(μ, θ)` against
//! opponents who follow the profile `μ*(·)`. The solver starts at the
//! baseline profile and iterates damped best responses on a type grid,
//! projecting every iterate onto non-decreasing profiles.

mod gain;
mod isotonic;

pub use gain::RankDistribution;
pub use isotonic::{isotonic, isotonic_weighted};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::baseline::{Baseline, BaselineError};
use crate::costmin::{optimal_allocation, CostError, CostPoint};
use crate::model::Scenario;
use crate::quad::QuadError;
use gain::{ContestEnvironment, GainSettings, TypeNodes};

const GOLDEN: f64 = 0.618_033_988_749_894_8;

#[derive(Debug, Error)]
pub enum EquilibriumError {
    #[error(transparent)]
    Baseline(#[from] BaselineError),

    #[error(transparent)]
    Cost(#[from] CostError),

    #[error("numerical integration failed: {0}")]
    Quadrature(#[from] QuadError),

    #[error("invalid solver option: {0}")]
    Options(String),

    #[error("the best-response bracket for type {theta} is empty")]
    EmptyBracket { theta: f64 },
}

/// Solver settings. Every field is echoed into run manifests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    /// Type-grid points for continuous type distributions.
    pub grid: usize,
    /// Weight on the new best response in each update.
    pub damping: f64,
    pub max_iter: usize,
    /// Sup-norm change that counts as converged.
    pub tol: f64,
    /// Coarse fitness points scanned before golden-section refinement.
    pub coarse: usize,
    pub golden_tol: f64,
    /// Gauss-Legendre nodes per type-grid cell for the opponent mixture.
    pub nodes_per_cell: usize,
    /// Knots of the tabulated opponent performance distribution.
    pub performance_points: usize,
    /// Knots of the tabulated contest gain.
    pub gain_points: usize,
    /// Absolute tolerance of the adaptive integration, per unit of top prize.
    pub quad_tol: f64,
    /// Overrides the fitness search bracket when set.
    pub mu_max: Option<f64>,
    /// Starting profile on the type grid; defaults to the baseline.
    pub initial: Option<Vec<f64>>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            grid: 201,
            damping: 0.5,
            max_iter: 500,
            tol: 1e-5,
            coarse: 200,
            golden_tol: 1e-6,
            nodes_per_cell: 3,
            performance_points: 2048,
            gain_points: 1024,
            quad_tol: 1e-10,
            mu_max: None,
            initial: None,
        }
    }
}

impl SolverOptions {
    fn check(&self) -> Result<(), EquilibriumError> {
        let bad = |m: &str| Err(EquilibriumError::Options(m.to_string()));
        if self.grid < 2 {
            return bad("the type grid needs at least two points");
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return bad("damping must lie in (0, 1]");
        }
        if !(self.tol > 0.0) || !(self.golden_tol > 0.0) || !(self.quad_tol > 0.0) {
            return bad("tolerances must be positive");
        }
        if self.coarse < 3 {
            return bad("the coarse search needs at least three points");
        }
        if let Some(m) = self.mu_max {
            if !(m > 0.0 && m.is_finite()) {
                return bad("mu_max must be positive and finite");
            }
        }
        Ok(())
    }

    fn gain_settings(&self) -> GainSettings {
        GainSettings {
            s_points: self.performance_points,
            gain_points: self.gain_points,
            quad_tol: self.quad_tol,
        }
    }
}

/// A symmetric strategy `θ ↦ μ*(θ)` on a type grid, interpolated linearly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyProfile {
    pub theta_grid: Vec<f64>,
    pub mu_star: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    /// Sup-norm change of the last update.
    pub residual: f64,
    /// `sup |BR(θ) − μ*(θ)|` against the returned profile.
    pub fixed_point_residual: f64,
}

impl StrategyProfile {
    /// A profile that is not the output of the solver, e.g. for evaluating
    /// gains against a hand-picked strategy.
    pub fn fixed(theta_grid: Vec<f64>, mu_star: Vec<f64>) -> Self {
        assert_eq!(theta_grid.len(), mu_star.len());
        Self {
            theta_grid,
            mu_star,
            converged: true,
            iterations: 0,
            residual: 0.0,
            fixed_point_residual: f64::NAN,
        }
    }

    /// `μ*(θ)`, clamped to the end values outside the grid.
    pub fn mu_at(&self, theta: f64) -> f64 {
        let g = &self.theta_grid;
        let n = g.len();
        if theta <= g[0] {
            return self.mu_star[0];
        }
        if theta >= g[n - 1] {
            return self.mu_star[n - 1];
        }
        let j = g.partition_point(|&x| x <= theta) - 1;
        let t = (theta - g[j]) / (g[j + 1] - g[j]);
        (1.0 - t) * self.mu_star[j] + t * self.mu_star[j + 1]
    }

    /// Least-cost efforts behind `μ*(θ)`.
    pub fn allocation_at(&self, s: &Scenario, theta: f64) -> Result<CostPoint, CostError> {
        optimal_allocation(s, self.mu_at(theta), theta)
    }
}

/// Type grid used by the solver: the atoms of a discrete distribution or
/// `n` evenly spaced points over the support.
pub fn type_grid(s: &Scenario, n: usize) -> Vec<f64> {
    if let Some(atoms) = s.types().atoms() {
        return atoms.iter().map(|a| a.0).collect();
    }
    let (lo, hi) = s.type_support();
    let n = n.max(2);
    (0..n)
        .map(|i| if i == n - 1 { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 })
        .collect()
}

/// Opponent-side quantities for a fixed profile: performance distribution,
/// rank probabilities, contest gain and best responses.
pub struct Contest<'a> {
    scenario: &'a Scenario,
    env: ContestEnvironment<'a>,
    options: SolverOptions,
}

impl<'a> Contest<'a> {
    pub fn new(scenario: &'a Scenario, profile: &StrategyProfile, options: &SolverOptions) -> Self {
        let nodes = TypeNodes::new(scenario.types(), &profile.theta_grid, options.nodes_per_cell);
        Self::with_nodes(scenario, &nodes, &profile.mu_star, options)
    }

    fn with_nodes(scenario: &'a Scenario, nodes: &TypeNodes, mu: &[f64], options: &SolverOptions) -> Self {
        let env = ContestEnvironment::new(scenario.noise(), scenario.prizes(), nodes, mu, options.gain_settings());
        Self {
            scenario,
            env,
            options: options.clone(),
        }
    }

    /// Distribution of one opponent's performance, `G(s)`.
    pub fn opponent_performance_cdf(&self, s: f64) -> f64 {
        self.env.mixture_cdf(s)
    }

    pub fn rank_probabilities(&self, mu: f64) -> Result<RankDistribution, QuadError> {
        self.env.rank_probabilities(mu)
    }

    /// Expected prize at fitness `mu`, by direct integration.
    pub fn contest_gain(&self, mu: f64) -> Result<f64, QuadError> {
        self.env.gain_and_slope(mu).map(|v| v.0)
    }

    /// `∂g/∂μ` by direct integration.
    pub fn contest_gain_slope(&self, mu: f64) -> Result<f64, QuadError> {
        self.env.gain_and_slope(mu).map(|v| v.1)
    }

    /// Upper end of the fitness search for type `theta`.
    ///
    /// Above the root of `∂C/∂μ = 1 + (R₁ − R_I)·sup_s|∂H/∂μ|` the payoff
    /// is falling for this type, whatever the opponents do; the bracket is
    /// twice that root.
    pub fn mu_bracket(&self, theta: f64) -> Result<f64, EquilibriumError> {
        if let Some(m) = self.options.mu_max {
            return Ok(m);
        }
        let s = self.scenario;
        let r = s.prizes().as_slice();
        let spread = r[0] - r[r.len() - 1];
        let excess = |mu: f64| -> Result<f64, EquilibriumError> {
            let p = optimal_allocation(s, mu, theta)?;
            Ok(p.dc_dmu - 1.0 - spread * s.noise().mean_sensitivity(mu))
        };
        let mut hi = 1.0;
        while excess(hi)? < 0.0 {
            hi *= 2.0;
            if hi > 1e9 {
                return Err(EquilibriumError::EmptyBracket { theta });
            }
        }
        let mut lo = 0.0;
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if excess(mid)? < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(2.0 * hi.max(1e-6))
    }

    fn prepare(&mut self, top: f64) -> Result<(), QuadError> {
        self.env.prepare_gain_curve(top)
    }

    /// Expected payoff `g(μ) + μ − C(μ, θ)`.
    pub fn payoff(&self, mu: f64, theta: f64) -> Result<f64, EquilibriumError> {
        let c = optimal_allocation(self.scenario, mu, theta)?.cost;
        Ok(self.env.gain(mu)? + mu - c)
    }

    /// Best fitness for type `theta`: a coarse scan of `[0, μ_max]` followed
    /// by golden-section refinement around the best scanned point.
    pub fn best_response(&self, theta: f64) -> Result<f64, EquilibriumError> {
        let top = self.mu_bracket(theta)?;
        let k = self.options.coarse;
        let step = top / (k - 1) as f64;
        let mut best = (0usize, f64::NEG_INFINITY);
        for i in 0..k {
            let v = self.payoff(step * i as f64, theta)?;
            if v > best.1 {
                best = (i, v);
            }
        }
        let lo = step * best.0.saturating_sub(1) as f64;
        let hi = step * (best.0 + 1).min(k - 1) as f64;
        let f = |m: f64| self.payoff(m, theta);
        let (mut a, mut b) = (lo, hi);
        let mut x1 = b - GOLDEN * (b - a);
        let mut x2 = a + GOLDEN * (b - a);
        let mut f1 = f(x1)?;
        let mut f2 = f(x2)?;
        while b - a > self.options.golden_tol {
            if f1 < f2 {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + GOLDEN * (b - a);
                f2 = f(x2)?;
            } else {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - GOLDEN * (b - a);
                f1 = f(x1)?;
            }
        }
        let refined = 0.5 * (a + b);
        let coarse_best = step * best.0 as f64;
        Ok(if f(refined)? >= best.1 { refined } else { coarse_best })
    }
}

/// Best response of type `theta` to a fixed profile.
pub fn best_response(
    s: &Scenario,
    profile: &StrategyProfile,
    theta: f64,
    options: &SolverOptions,
) -> Result<f64, EquilibriumError> {
    let mut contest = Contest::new(s, profile, options);
    let top = contest.mu_bracket(theta)?;
    contest.prepare(top)?;
    contest.best_response(theta)
}

fn best_responses(
    s: &Scenario,
    nodes: &TypeNodes,
    grid: &[f64],
    mu: &[f64],
    options: &SolverOptions,
) -> Result<Vec<f64>, EquilibriumError> {
    let mut contest = Contest::with_nodes(s, nodes, mu, options);
    if !contest.env.gain_is_flat() {
        let top = grid
            .iter()
            .map(|&t| contest.mu_bracket(t))
            .try_fold(0.0f64, |m, v| v.map(|v| m.max(v)))?;
        contest.prepare(top)?;
    }
    grid.par_iter().map(|&t| contest.best_response(t)).collect()
}

/// Damped best-response iteration from the baseline (or a supplied start).
///
/// Non-convergence is not an error: the profile comes back with
/// `converged = false` and its residuals.
pub fn solve_equilibrium(s: &Scenario, options: &SolverOptions) -> Result<StrategyProfile, EquilibriumError> {
    options.check()?;
    let grid = type_grid(s, options.grid);
    let mut mu = match &options.initial {
        Some(init) => {
            if init.len() != grid.len() {
                return Err(EquilibriumError::Options(format!(
                    "initial profile has {} points, the type grid {}",
                    init.len(),
                    grid.len()
                )));
            }
            init.clone()
        }
        None => {
            let base = Baseline::new(s);
            grid.iter()
                .map(|&t| base.solve(t).map(|p| p.mu_dag))
                .collect::<Result<Vec<_>, _>>()?
        }
    };
    let nodes = TypeNodes::new(s.types(), &grid, options.nodes_per_cell);
    let weights = vec![1.0; grid.len()];

    let mut iterations = 0;
    let mut residual = f64::INFINITY;
    let mut converged = false;
    while iterations < options.max_iter {
        iterations += 1;
        let br = best_responses(s, &nodes, &grid, &mu, options)?;
        let damped: Vec<f64> = mu
            .iter()
            .zip(&br)
            .map(|(m, b)| (1.0 - options.damping) * m + options.damping * b)
            .collect();
        let next = isotonic_weighted(&damped, &weights);
        residual = next.iter().zip(&mu).fold(0.0f64, |r, (a, b)| r.max((a - b).abs()));
        mu = next;
        if residual < options.tol {
            converged = true;
            break;
        }
    }
    let br = best_responses(s, &nodes, &grid, &mu, options)?;
    let fixed_point_residual = br.iter().zip(&mu).fold(0.0f64, |r, (a, b)| r.max((a - b).abs()));
    Ok(StrategyProfile {
        theta_grid: grid,
        mu_star: mu,
        converged,
        iterations,
        residual,
        fixed_point_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Example, FormSpec, PrizeVector, Registry};

    fn ex1(prizes: Vec<f64>) -> Scenario {
        Example::PerfectSubstitutes.scenario().with_prizes(PrizeVector::new(prizes).unwrap())
    }

    fn flat_profile(s: &Scenario, mu: f64) -> StrategyProfile {
        let grid = type_grid(s, 21);
        let n = grid.len();
        StrategyProfile::fixed(grid, vec![mu; n])
    }

    #[test]
    fn single_player_always_ranks_first() {
        let s = ex1(vec![2.0]);
        let c = Contest::new(&s, &flat_profile(&s, 1.0), &SolverOptions::default());
        let r = c.rank_probabilities(0.3).unwrap();
        assert_eq!(r.p.len(), 1);
        assert!((r.p[0] - 1.0).abs() < 1e-12);
        assert!((c.contest_gain(0.3).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn equal_fitness_is_a_coin_flip() {
        let s = ex1(vec![1.0, 0.0]);
        let c = Contest::new(&s, &flat_profile(&s, 1.7), &SolverOptions::default());
        let r = c.rank_probabilities(1.7).unwrap();
        assert!((r.p[0] - 0.5).abs() < 1e-8 && (r.p[1] - 0.5).abs() < 1e-8);
        assert!((c.contest_gain(1.7).unwrap() - 0.5).abs() < 1e-8);
        assert!((c.opponent_performance_cdf(1.7) - 0.5).abs() < 1e-8);
    }

    #[test]
    fn performance_cdf_limits() {
        let s = ex1(vec![1.0, 0.0]);
        let c = Contest::new(&s, &flat_profile(&s, 1.0), &SolverOptions::default());
        assert!(c.opponent_performance_cdf(-50.0) < 1e-12);
        assert!(c.opponent_performance_cdf(50.0) > 1.0 - 1e-12);
    }

    #[test]
    fn zero_prizes_give_zero_gain() {
        let s = ex1(vec![0.0, 0.0, 0.0]);
        let c = Contest::new(&s, &flat_profile(&s, 1.0), &SolverOptions::default());
        for mu in [0.0, 0.5, 3.0] {
            assert_eq!(c.contest_gain(mu).unwrap(), 0.0);
        }
    }

    #[test]
    fn ranks_sum_to_one_and_shift_with_fitness() {
        let s = ex1(vec![3.0, 1.0, 0.5, 0.0, 0.0]);
        let grid = type_grid(&s, 41);
        let mu: Vec<f64> = grid.iter().map(|t| t * t).collect();
        let c = Contest::new(&s, &StrategyProfile::fixed(grid, mu), &SolverOptions::default());
        let mut prev: Option<RankDistribution> = None;
        let mut prev_gain = f64::NEG_INFINITY;
        for i in 0..30 {
            let m = 0.3 * i as f64;
            let r = c.rank_probabilities(m).unwrap();
            assert!((r.p.iter().sum::<f64>() - 1.0).abs() < 1e-8);
            assert!(r.cumulative.windows(2).all(|w| w[0] <= w[1] + 1e-12));
            if let Some(p) = &prev {
                for k in 0..5 {
                    assert!(r.cumulative[k] >= p.cumulative[k] - 1e-6);
                }
            }
            let g = c.contest_gain(m).unwrap();
            assert!((g - r.expected_prize(s.prizes())).abs() < 1e-8);
            assert!(g >= prev_gain - 1e-9 && g <= 3.0 + 1e-12);
            prev_gain = g;
            prev = Some(r);
        }
    }

    #[test]
    fn gain_slope_matches_finite_difference() {
        let s = ex1(vec![2.0, 1.0, 0.0]);
        let grid = type_grid(&s, 41);
        let mu: Vec<f64> = grid.iter().map(|t| 0.5 + t).collect();
        let c = Contest::new(&s, &StrategyProfile::fixed(grid, mu), &SolverOptions::default());
        for m in [0.2, 1.0, 2.5] {
            let h = 1e-4;
            let fd = (c.contest_gain(m + h).unwrap() - c.contest_gain(m - h).unwrap()) / (2.0 * h);
            assert!((fd - c.contest_gain_slope(m).unwrap()).abs() < 1e-6);
        }
    }

    #[test]
    fn zero_prize_equilibrium_is_the_baseline() {
        let s = ex1(vec![0.0, 0.0]);
        let p = solve_equilibrium(&s, &SolverOptions::default()).unwrap();
        assert!(p.converged);
        let base = Baseline::new(&s);
        for (t, m) in p.theta_grid.iter().zip(&p.mu_star) {
            assert!((m - base.solve(*t).unwrap().mu_dag).abs() < 1e-4, "theta {t}");
        }
    }

    #[test]
    fn discrete_types_use_the_atoms() {
        let spec = FormSpec::new("discrete").with("atoms", serde_json::json!([[0.5, 0.5], [2.0, 0.5]]));
        let s = ex1(vec![1.0, 0.0]).with_types(spec, &Registry::builtin()).unwrap();
        assert_eq!(type_grid(&s, 201), vec![0.5, 2.0]);
        let opts = SolverOptions {
            coarse: 100,
            ..SolverOptions::default()
        };
        let p = solve_equilibrium(&s, &opts).unwrap();
        assert!(p.converged && p.fixed_point_residual < 1e-4);
        assert!(p.mu_star[0] <= p.mu_star[1]);
    }

    #[test]
    fn profile_interpolates_and_clamps() {
        let p = StrategyProfile::fixed(vec![0.0, 1.0, 2.0], vec![0.0, 2.0, 3.0]);
        assert_eq!(p.mu_at(-1.0), 0.0);
        assert_eq!(p.mu_at(0.5), 1.0);
        assert_eq!(p.mu_at(1.5), 2.5);
        assert_eq!(p.mu_at(9.0), 3.0);
    }

    #[test]
    fn options_are_checked() {
        let s = ex1(vec![1.0, 0.0]);
        let bad = SolverOptions {
            damping: 0.0,
            ..SolverOptions::default()
        };
        assert!(matches!(solve_equilibrium(&s, &bad), Err(EquilibriumError::Options(_))));
        let bad = SolverOptions {
            initial: Some(vec![0.0; 3]),
            ..SolverOptions::default()
        };
        assert!(solve_equilibrium(&s, &bad).is_err());
    }
}
