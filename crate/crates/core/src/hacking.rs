//! Benchmark hacking: per-type comparison of contest and baseline efforts,
//! the only-mechanize threshold `θ₁*`, and prize-skewness sweeps.
//!
//! A type hacks when its contest allocation carries no more creative effort
//! than its baseline allocation but strictly more mechanistic effort.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::baseline::{Baseline, BaselineError, BaselinePoint, BaselineThresholds};
use crate::costmin::{CostCase, CostError, EffortAllocation};
use crate::equilibrium::{solve_equilibrium, EquilibriumError, SolverOptions, StrategyProfile};
use crate::model::{PrizeVector, Scenario};

/// Slack on `a* ≤ a†`.
pub const CREATIVE_TOL: f64 = 1e-6;
/// Margin by which `b*` must exceed `b†` to count as hacking.
pub const MECHANISTIC_MARGIN: f64 = 1e-6;
const THRESHOLD_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum HackingError {
    #[error("prize vectors have different lengths ({0} and {1})")]
    LengthMismatch(usize, usize),

    #[error("prize vectors {0} and {1} are not comparable by skewness")]
    Incomparable(PrizeVector, PrizeVector),

    #[error("the profile did not converge (residual {residual}); pass force to classify anyway")]
    Unconverged { residual: f64 },

    #[error("a sweep needs at least one prize vector")]
    EmptySweep,

    #[error(transparent)]
    Baseline(#[from] BaselineError),

    #[error(transparent)]
    Cost(#[from] CostError),

    #[error(transparent)]
    Equilibrium(#[from] EquilibriumError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SkewRelation {
    /// Every prize gap of the first vector weakly exceeds the second's.
    Geq,
    Leq,
    Equal,
    Incomparable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkewnessComparison {
    pub r: PrizeVector,
    pub r_prime: PrizeVector,
    pub relation: SkewRelation,
}

/// Compares consecutive prize gaps `R_k − R_{k+1}`, `k = 1..I−1`.
pub fn compare_prize_vectors(r: &PrizeVector, r_prime: &PrizeVector) -> Result<SkewnessComparison, HackingError> {
    if r.len() != r_prime.len() {
        return Err(HackingError::LengthMismatch(r.len(), r_prime.len()));
    }
    let g = r.gaps();
    let h = r_prime.gaps();
    let geq = g.iter().zip(&h).all(|(x, y)| x >= y);
    let leq = g.iter().zip(&h).all(|(x, y)| x <= y);
    let relation = match (geq, leq) {
        (true, true) => SkewRelation::Equal,
        (true, false) => SkewRelation::Geq,
        (false, true) => SkewRelation::Leq,
        (false, false) => SkewRelation::Incomparable,
    };
    Ok(SkewnessComparison {
        r: r.clone(),
        r_prime: r_prime.clone(),
        relation,
    })
}

/// Position of a type relative to `θ₁*`, `θ₁†` and `θ₂†`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HackingRegion {
    /// `θ < θ₁*`: only mechanizes in the contest.
    BelowStar1,
    /// `θ₁* ≤ θ < θ₁†`.
    Star1ToDagger1,
    /// `θ₁† ≤ θ < θ₂†`.
    Dagger1ToDagger2,
    /// `θ ≥ θ₂†`.
    AboveDagger2,
}

impl fmt::Display for HackingRegion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            HackingRegion::BelowStar1 => "below-theta1-star",
            HackingRegion::Star1ToDagger1 => "theta1-star-to-theta1-dag",
            HackingRegion::Dagger1ToDagger2 => "theta1-dag-to-theta2-dag",
            HackingRegion::AboveDagger2 => "above-theta2-dag",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HackingVerdict {
    pub theta: f64,
    pub baseline: BaselinePoint,
    /// Least-cost allocation at `μ*(θ)`.
    pub contest: EffortAllocation,
    pub mu_star: f64,
    pub hacks: bool,
    pub region: HackingRegion,
}

/// The hacking rule on a pair of allocations.
pub fn is_hacking(a_star: f64, b_star: f64, a_dag: f64, b_dag: f64) -> bool {
    a_star <= a_dag + CREATIVE_TOL && b_star > b_dag + MECHANISTIC_MARGIN
}

/// `θ₁* = sup{θ : ξ'(b*(θ)) ≥ ∂ν/∂a(0, θ)}`, the upper end of the types that
/// only mechanize at their equilibrium fitness.
///
/// The condition is evaluated as "the least-cost allocation at `μ*(θ)` is the
/// mechanistic corner", i.e. with `b*` replaced by `ξ⁻¹(μ*)`. The two agree
/// on corner types; with a production form linear in `a` the literal
/// inequality also holds with equality at every interior type.
///
/// The grid is scanned for the last type where the condition holds and the
/// crossing to its right neighbour is refined by bisection on the
/// interpolated profile. `-∞` when no grid type only mechanizes, `+∞` when
/// the top type does.
pub fn hacking_threshold(profile: &StrategyProfile, s: &Scenario) -> Result<f64, HackingError> {
    let only_mechanizes = |theta: f64| -> Result<bool, HackingError> {
        Ok(profile.allocation_at(s, theta)?.allocation.case == CostCase::C1)
    };
    let grid = &profile.theta_grid;
    let mut last = None;
    for (i, &t) in grid.iter().enumerate() {
        if only_mechanizes(t)? {
            last = Some(i);
        }
    }
    let Some(i) = last else {
        return Ok(f64::NEG_INFINITY);
    };
    if i + 1 == grid.len() {
        return Ok(f64::INFINITY);
    }
    let (mut lo, mut hi) = (grid[i], grid[i + 1]);
    while hi - lo > THRESHOLD_TOL {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if only_mechanizes(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Hacking analysis of one equilibrium profile.
pub struct HackingAnalysis<'a> {
    scenario: &'a Scenario,
    profile: &'a StrategyProfile,
    baseline: Baseline<'a>,
    theta1_star: f64,
}

impl<'a> HackingAnalysis<'a> {
    /// Refuses an unconverged profile unless `force` is set.
    pub fn new(scenario: &'a Scenario, profile: &'a StrategyProfile, force: bool) -> Result<Self, HackingError> {
        if !profile.converged && !force {
            return Err(HackingError::Unconverged {
                residual: profile.residual,
            });
        }
        Ok(Self {
            scenario,
            profile,
            baseline: Baseline::new(scenario),
            theta1_star: hacking_threshold(profile, scenario)?,
        })
    }

    pub fn theta1_star(&self) -> f64 {
        self.theta1_star
    }

    pub fn thresholds(&self) -> BaselineThresholds {
        self.baseline.thresholds()
    }

    pub fn region(&self, theta: f64) -> HackingRegion {
        let t = self.thresholds();
        if theta < self.theta1_star {
            HackingRegion::BelowStar1
        } else if theta < t.theta1_dag {
            HackingRegion::Star1ToDagger1
        } else if theta < t.theta2_dag {
            HackingRegion::Dagger1ToDagger2
        } else {
            HackingRegion::AboveDagger2
        }
    }

    pub fn classify(&self, theta: f64) -> Result<HackingVerdict, HackingError> {
        let baseline = self.baseline.solve(theta)?;
        let point = self.profile.allocation_at(self.scenario, theta)?;
        let c = point.allocation;
        Ok(HackingVerdict {
            theta,
            baseline,
            contest: c,
            mu_star: point.mu,
            hacks: is_hacking(c.a, c.b, baseline.a_dag, baseline.b_dag),
            region: self.region(theta),
        })
    }

    /// Verdicts at every grid type.
    pub fn verdicts(&self) -> Result<Vec<HackingVerdict>, HackingError> {
        self.profile.theta_grid.iter().map(|&t| self.classify(t)).collect()
    }

    /// Type-distribution mass of the hacking types. Each grid type carries
    /// the mass of the cell between the midpoints to its neighbours, or its
    /// own mass for a discrete distribution.
    pub fn hacking_measure(&self) -> Result<f64, HackingError> {
        let verdicts = self.verdicts()?;
        let weights = grid_masses(self.scenario, &self.profile.theta_grid);
        Ok(verdicts.iter().zip(&weights).filter(|(v, _)| v.hacks).map(|(_, w)| w).sum())
    }

    /// Grid points breaking the effort comparisons that hold inside each
    /// region: only mechanizing with more mechanistic effort below `θ₁*`,
    /// more mechanistic effort with creative effort only in the contest up to
    /// `θ₁†`, and weakly more of both efforts up to `θ₂†`. Types within
    /// `margin` of a threshold are skipped; nothing is asserted above `θ₂†`.
    pub fn region_violations(&self, tol: f64, margin: f64) -> Result<Vec<RegionViolation>, HackingError> {
        let t = self.thresholds();
        let near = |x: f64, edge: f64| edge.is_finite() && (x - edge).abs() <= margin * (1.0 + edge.abs());
        let mut out = Vec::new();
        for v in self.verdicts()? {
            let th = v.theta;
            if near(th, self.theta1_star) || near(th, t.theta1_dag) || near(th, t.theta2_dag) {
                continue;
            }
            let (a, b) = (v.contest.a, v.contest.b);
            let (ad, bd) = (v.baseline.a_dag, v.baseline.b_dag);
            let mut fail = |what: &str| {
                out.push(RegionViolation {
                    theta: th,
                    region: v.region,
                    detail: format!("{what}: a*={a}, b*={b}, a†={ad}, b†={bd}"),
                })
            };
            match v.region {
                HackingRegion::BelowStar1 => {
                    if a > tol {
                        fail("creative effort below theta1*");
                    }
                    if !(b > bd - tol && bd > -tol) {
                        fail("mechanistic effort not above baseline");
                    }
                }
                HackingRegion::Star1ToDagger1 => {
                    if !(b > bd - tol) {
                        fail("mechanistic effort not above baseline");
                    }
                    if !(a > -tol && ad <= tol) {
                        fail("creative effort not contest-only");
                    }
                }
                HackingRegion::Dagger1ToDagger2 => {
                    if a < ad - tol || b < bd - tol {
                        fail("an effort is lower in the contest");
                    }
                }
                HackingRegion::AboveDagger2 => {}
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionViolation {
    pub theta: f64,
    pub region: HackingRegion,
    pub detail: String,
}

/// `classify_hacking` for a single type without keeping the analysis around.
pub fn classify_hacking(
    s: &Scenario,
    theta: f64,
    profile: &StrategyProfile,
    force: bool,
) -> Result<HackingVerdict, HackingError> {
    HackingAnalysis::new(s, profile, force)?.classify(theta)
}

/// Mass of the type distribution attached to each grid point.
pub fn grid_masses(s: &Scenario, grid: &[f64]) -> Vec<f64> {
    let types = s.types();
    if let Some(atoms) = types.atoms() {
        return grid
            .iter()
            .map(|&g| atoms.iter().filter(|a| a.0 == g).map(|a| a.1).sum())
            .collect();
    }
    let n = grid.len();
    (0..n)
        .map(|i| {
            let lo = if i == 0 { f64::NEG_INFINITY } else { 0.5 * (grid[i - 1] + grid[i]) };
            let hi = if i + 1 == n { f64::INFINITY } else { 0.5 * (grid[i] + grid[i + 1]) };
            let cdf = |x: f64| {
                if x == f64::NEG_INFINITY {
                    0.0
                } else if x == f64::INFINITY {
                    1.0
                } else {
                    types.cdf(x)
                }
            };
            cdf(hi) - cdf(lo)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub prize_id: usize,
    pub theta: f64,
    pub mu_star: f64,
    pub a_star: f64,
    pub b_star: f64,
    pub hacks: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub prizes: PrizeVector,
    pub profile: StrategyProfile,
    pub theta1_star: f64,
    pub hacking_measure: f64,
}

/// A comparative-statics prediction that failed beyond tolerance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SweepViolation {
    /// `μ*` is lower under the more skewed vector.
    Fitness {
        more_skewed: usize,
        less_skewed: usize,
        theta: f64,
        shortfall: f64,
    },
    /// More hacking mass under the more skewed vector.
    HackingMeasure {
        more_skewed: usize,
        less_skewed: usize,
        excess: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkewnessSweep {
    pub entries: Vec<SweepEntry>,
    pub rows: Vec<SweepRow>,
    pub violations: Vec<SweepViolation>,
    pub tolerance: f64,
}

/// Solves one equilibrium per prize vector and checks that more skewed
/// vectors raise `μ*` pointwise and shrink the hacking mass. Failures are
/// reported in `violations`, not raised.
pub fn skewness_sweep(
    s: &Scenario,
    prize_vectors: &[PrizeVector],
    options: &SolverOptions,
    tolerance: f64,
) -> Result<SkewnessSweep, HackingError> {
    if prize_vectors.is_empty() {
        return Err(HackingError::EmptySweep);
    }
    let mut relations = Vec::new();
    for i in 0..prize_vectors.len() {
        for j in (i + 1)..prize_vectors.len() {
            let c = compare_prize_vectors(&prize_vectors[i], &prize_vectors[j])?;
            if c.relation == SkewRelation::Incomparable {
                return Err(HackingError::Incomparable(c.r, c.r_prime));
            }
            relations.push((i, j, c.relation));
        }
    }

    let mut entries = Vec::with_capacity(prize_vectors.len());
    let mut rows = Vec::new();
    for (id, r) in prize_vectors.iter().enumerate() {
        let scenario = s.with_prizes(r.clone());
        let profile = solve_equilibrium(&scenario, options)?;
        let analysis = HackingAnalysis::new(&scenario, &profile, true)?;
        let verdicts = analysis.verdicts()?;
        let weights = grid_masses(&scenario, &profile.theta_grid);
        let hacking_measure = verdicts.iter().zip(&weights).filter(|(v, _)| v.hacks).map(|(_, w)| w).sum();
        rows.extend(verdicts.iter().map(|v| SweepRow {
            prize_id: id,
            theta: v.theta,
            mu_star: v.mu_star,
            a_star: v.contest.a,
            b_star: v.contest.b,
            hacks: v.hacks,
        }));
        let theta1_star = analysis.theta1_star();
        entries.push(SweepEntry {
            prizes: r.clone(),
            profile,
            theta1_star,
            hacking_measure,
        });
    }

    let mut violations = Vec::new();
    for (i, j, rel) in relations {
        let (hi, lo) = match rel {
            SkewRelation::Geq => (i, j),
            SkewRelation::Leq => (j, i),
            _ => continue,
        };
        let (p, q) = (&entries[hi].profile, &entries[lo].profile);
        for ((t, m_hi), m_lo) in p.theta_grid.iter().zip(&p.mu_star).zip(&q.mu_star) {
            if *m_hi < m_lo - tolerance {
                violations.push(SweepViolation::Fitness {
                    more_skewed: hi,
                    less_skewed: lo,
                    theta: *t,
                    shortfall: m_lo - m_hi,
                });
            }
        }
        let excess = entries[hi].hacking_measure - entries[lo].hacking_measure;
        if excess > tolerance {
            violations.push(SweepViolation::HackingMeasure {
                more_skewed: hi,
                less_skewed: lo,
                excess,
            });
        }
    }
    Ok(SkewnessSweep {
        entries,
        rows,
        violations,
        tolerance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Example;

    fn pv(v: &[f64]) -> PrizeVector {
        PrizeVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn skewness_relations() {
        let rel = |a: &[f64], b: &[f64]| compare_prize_vectors(&pv(a), &pv(b)).unwrap().relation;
        assert_eq!(rel(&[6.0, 4.0, 3.0, 0.0], &[6.0, 5.0, 4.0, 3.0]), SkewRelation::Geq);
        assert_eq!(rel(&[6.0, 5.0, 4.0, 3.0], &[6.0, 4.0, 3.0, 0.0]), SkewRelation::Leq);
        assert_eq!(rel(&[2.0, 1.0], &[2.0, 1.0]), SkewRelation::Equal);
        assert_eq!(rel(&[3.0, 1.0, 0.0], &[2.0, 2.0, 0.0]), SkewRelation::Incomparable);
        assert_eq!(rel(&[5.0, 1.0, 1.0], &[0.0, 0.0, 0.0]), SkewRelation::Geq);
        // Shifting every prize by a constant leaves the gaps alone.
        assert_eq!(rel(&[3.0, 2.0], &[1.0, 0.0]), SkewRelation::Equal);
        assert!(matches!(
            compare_prize_vectors(&pv(&[1.0]), &pv(&[1.0, 0.0])),
            Err(HackingError::LengthMismatch(1, 2))
        ));
    }

    #[test]
    fn hacking_rule_needs_strictly_more_mechanization() {
        assert!(is_hacking(0.0, 1.0, 0.0, 0.5));
        assert!(!is_hacking(0.0, 0.5 + 1e-7, 0.0, 0.5));
        assert!(!is_hacking(0.2, 1.0, 0.1, 0.5));
        assert!(!is_hacking(0.0, 0.4, 0.0, 0.5));
    }

    #[test]
    fn grid_masses_sum_to_one() {
        let s = Example::PerfectSubstitutes.scenario();
        let grid: Vec<f64> = (0..31).map(|i| 0.1 * i as f64).collect();
        let w = grid_masses(&s, &grid);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((w[0] - 0.05 / 3.0).abs() < 1e-12 && (w[10] - 0.1 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn unconverged_profiles_are_refused() {
        let s = Example::PerfectSubstitutes.scenario();
        let mut p = StrategyProfile::fixed(vec![0.0, 3.0], vec![1.0, 9.0]);
        p.converged = false;
        assert!(matches!(HackingAnalysis::new(&s, &p, false), Err(HackingError::Unconverged { .. })));
        assert!(HackingAnalysis::new(&s, &p, true).is_ok());
    }

    #[test]
    fn threshold_sentinels() {
        let s = Example::PerfectSubstitutes.scenario();
        // Linear forms: only mechanizing means θ ≤ ξ' = 1 whatever the profile.
        let p = StrategyProfile::fixed(vec![0.0, 3.0], vec![1.0, 9.0]);
        assert!((hacking_threshold(&p, &s).unwrap() - 1.0).abs() < 1e-9);
        let p = StrategyProfile::fixed(vec![2.0, 3.0], vec![4.0, 9.0]);
        assert_eq!(hacking_threshold(&p, &s).unwrap(), f64::NEG_INFINITY);
        let p = StrategyProfile::fixed(vec![0.0, 0.5], vec![1.0, 1.0]);
        assert_eq!(hacking_threshold(&p, &s).unwrap(), f64::INFINITY);
    }

    #[test]
    fn sweep_rejects_incomparable_vectors() {
        let s = Example::PerfectSubstitutes.scenario();
        let r = skewness_sweep(&s, &[pv(&[3.0, 1.0, 0.0]), pv(&[2.0, 2.0, 0.0])], &SolverOptions::default(), 1e-4);
        assert!(matches!(r, Err(HackingError::Incomparable(..))));
        assert!(matches!(skewness_sweep(&s, &[], &SolverOptions::default(), 1e-4), Err(HackingError::EmptySweep)));
    }

    #[test]
    fn zero_prize_sweep_is_the_baseline() {
        let s = Example::PerfectSubstitutes.scenario();
        let sweep = skewness_sweep(&s, &[PrizeVector::zeros(2)], &SolverOptions::default(), 1e-4).unwrap();
        assert_eq!(sweep.entries.len(), 1);
        assert!(sweep.violations.is_empty());
        assert_eq!(sweep.entries[0].hacking_measure, 0.0);
        let base = Baseline::new(&s);
        for row in &sweep.rows {
            assert!((row.mu_star - base.solve(row.theta).unwrap().mu_dag).abs() < 1e-4);
            assert!(!row.hacks);
        }
    }
}
