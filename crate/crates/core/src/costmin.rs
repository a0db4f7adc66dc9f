//! Least-cost effort allocation `φ‡(μ, θ)` and the induced cost `C(μ, θ)`.
//!
//! Since `c` is increasing, minimizing `c(a + b)` on the fitness constraint is
//! the same as minimizing total effort. Writing `a = y` and
//! `b(y) = ξ⁻¹(μ − ν(y, θ))`, total effort is convex in `y` with slope
//! `1 − ∂ν/∂a / ψ(y)` where `ψ(y) = ξ'(b(y))`. The sign of
//! `ψ(y) − ∂ν/∂a(y)` at the two ends of `[0, ā]` picks the case:
//!
//! * `C1`: non-negative at `y = 0`, all effort is mechanistic;
//! * `C3`: non-positive at `y = ā`, all effort is creative;
//! * `C2`: otherwise, the interior root where `ξ'(b) = ∂ν/∂a`.
//!
//! Equality at an endpoint resolves to the corner.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::Scenario;

/// Fitness within this distance of a saturating production form's supremum
/// cannot be reached by creative effort alone.
pub const SATURATION_MARGIN: f64 = 1e-6;

const ROOT_REL_TOL: f64 = 1e-14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CostError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("fitness {mu} is unreachable for type {theta}")]
    Unreachable { mu: f64, theta: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CostCase {
    /// Mechanistic effort only.
    C1,
    /// Both efforts positive.
    C2,
    /// Creative effort only.
    C3,
}

impl fmt::Display for CostCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            CostCase::C1 => "C1",
            CostCase::C2 => "C2",
            CostCase::C3 => "C3",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffortAllocation {
    pub a: f64,
    pub b: f64,
    pub e: f64,
    pub case: CostCase,
}

impl EffortAllocation {
    fn new(a: f64, b: f64, case: CostCase) -> Self {
        Self { a, b, e: a + b, case }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostPoint {
    pub mu: f64,
    pub theta: f64,
    pub allocation: EffortAllocation,
    pub cost: f64,
    /// Shadow value of the fitness constraint.
    pub lambda: f64,
    /// `∂C/∂μ = c'(e)·λ`.
    pub dc_dmu: f64,
}

/// `ā` solving `ν(ā, θ) = target` (`None` when creative effort alone cannot
/// reach it) and `b̄` solving `ξ(b̄) = target`.
pub fn invert_production(
    s: &Scenario,
    target: f64,
    theta: f64,
) -> Result<(Option<f64>, f64), CostError> {
    check_inputs(target, theta)?;
    Ok((a_bar(s, target, theta), s.xi().invert(target)))
}

fn a_bar(s: &Scenario, target: f64, theta: f64) -> Option<f64> {
    let sup = s.nu().supremum(theta);
    if sup.is_finite() && target >= sup - SATURATION_MARGIN {
        return None;
    }
    s.nu().invert(target, theta).filter(|a| a.is_finite())
}

fn check_inputs(mu: f64, theta: f64) -> Result<(), CostError> {
    if !(mu >= 0.0) || !mu.is_finite() {
        return Err(CostError::Domain(format!("fitness must be finite and non-negative, got {mu}")));
    }
    if !theta.is_finite() {
        return Err(CostError::Domain(format!("type must be finite, got {theta}")));
    }
    Ok(())
}

/// Least-cost allocation reaching fitness `mu` for type `theta`.
pub fn optimal_allocation(s: &Scenario, mu: f64, theta: f64) -> Result<CostPoint, CostError> {
    check_inputs(mu, theta)?;
    if theta < s.nu().min_type() {
        return Err(CostError::Domain(format!("type {theta} is below the production domain")));
    }
    let alloc = allocate(s, mu, theta)?;
    Ok(finish(s, mu, theta, alloc))
}

fn allocate(s: &Scenario, mu: f64, theta: f64) -> Result<EffortAllocation, CostError> {
    let nu = s.nu();
    let xi = s.xi();
    if mu == 0.0 {
        let case = if xi.marginal(0.0) >= nu.marginal(0.0, theta) {
            CostCase::C1
        } else {
            CostCase::C3
        };
        return Ok(EffortAllocation::new(0.0, 0.0, case));
    }
    let b_bar = xi.invert(mu);
    if !b_bar.is_finite() {
        return Err(CostError::Unreachable { mu, theta });
    }
    let a_max = a_bar(s, mu, theta);

    match (nu.constant_marginal(theta), xi.constant_marginal()) {
        (Some(m), Some(k)) => {
            return Ok(match a_max {
                Some(a) if m > k => EffortAllocation::new(a, 0.0, CostCase::C3),
                _ => EffortAllocation::new(0.0, b_bar, CostCase::C1),
            });
        }
        (Some(m), None) => {
            // ξ'(b) = m pins mechanistic effort; creative effort fills the rest.
            let b_star = xi.invert_marginal(m);
            if b_bar <= b_star {
                return Ok(EffortAllocation::new(0.0, b_bar, CostCase::C1));
            }
            if b_star == 0.0 {
                if let Some(a) = a_max {
                    return Ok(EffortAllocation::new(a, 0.0, CostCase::C3));
                }
            } else if let Some(a) = nu.invert(mu - xi.value(b_star), theta) {
                return Ok(EffortAllocation::new(a, b_star, CostCase::C2));
            }
        }
        (None, Some(k)) => {
            // ∂ν/∂a = k pins creative effort; mechanistic effort fills the rest.
            if k >= nu.marginal(0.0, theta) {
                return Ok(EffortAllocation::new(0.0, b_bar, CostCase::C1));
            }
            let a_star = nu.invert_marginal(k, theta);
            if let Some(a) = a_max {
                if a <= a_star {
                    return Ok(EffortAllocation::new(a, 0.0, CostCase::C3));
                }
            }
            let b = xi.invert(mu - nu.value(a_star, theta));
            return Ok(EffortAllocation::new(a_star, b, CostCase::C2));
        }
        (None, None) => {}
    }
    Ok(general_allocation(s, mu, theta, b_bar, a_max))
}

fn general_allocation(
    s: &Scenario,
    mu: f64,
    theta: f64,
    b_bar: f64,
    a_max: Option<f64>,
) -> EffortAllocation {
    let nu = s.nu();
    let xi = s.xi();
    let b_of = |y: f64| xi.invert((mu - nu.value(y, theta)).max(0.0));
    let gap = |y: f64| xi.marginal(b_of(y)) - nu.marginal(y, theta);

    if gap(0.0) >= 0.0 {
        return EffortAllocation::new(0.0, b_bar, CostCase::C1);
    }
    let hi = match a_max {
        Some(a) => {
            if xi.marginal(0.0) <= nu.marginal(a, theta) {
                return EffortAllocation::new(a, 0.0, CostCase::C3);
            }
            a
        }
        None => {
            let mut hi = 1.0;
            while gap(hi) < 0.0 && hi < 1e12 {
                hi *= 2.0;
            }
            hi
        }
    };
    let y = bisect(gap, 0.0, hi);
    EffortAllocation::new(y, b_of(y), CostCase::C2)
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    while hi - lo > ROOT_REL_TOL * hi.max(1e-300) {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn finish(s: &Scenario, mu: f64, theta: f64, alloc: EffortAllocation) -> CostPoint {
    let lambda = match alloc.case {
        CostCase::C1 | CostCase::C2 => 1.0 / s.xi().marginal(alloc.b),
        CostCase::C3 => 1.0 / s.nu().marginal(alloc.a, theta),
    };
    CostPoint {
        mu,
        theta,
        allocation: alloc,
        cost: s.cost().value(alloc.e),
        lambda,
        dc_dmu: s.cost().marginal(alloc.e) * lambda,
    }
}

/// `C(μ, θ)` alone.
pub fn cost(s: &Scenario, mu: f64, theta: f64) -> Result<f64, CostError> {
    optimal_allocation(s, mu, theta).map(|p| p.cost)
}

/// Cost points along an ascending fitness grid.
pub fn cost_curve(s: &Scenario, theta: f64, grid: &[f64]) -> Result<Vec<CostPoint>, CostError> {
    if grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(CostError::Domain("fitness grid must be sorted ascending".into()));
    }
    grid.iter().map(|&mu| optimal_allocation(s, mu, theta)).collect()
}
