//! Single-agent baseline: maximize `μ − C(μ, θ)` with no prizes at stake.
//!
//! The optimum sits in one of three regions, separated by the thresholds
//! `θ₁† ≤ θ₂†`:
//!
//! * `B1` (`θ < θ₁†`): mechanistic only, `ξ'(b) = c'(b)`;
//! * `B2`: both efforts, `ξ'(b) = ∂ν/∂a = c'(a + b)`;
//! * `B3` (`θ > θ₂†`): creative only, `∂ν/∂a = c'(a)`.
//!
//! A type exactly at a threshold is assigned to `B2`.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::Scenario;

const THRESHOLD_TOL: f64 = 1e-10;
const MAX_BRACKET: f64 = 1e12;
/// Slightly negative efforts from round-off next to a threshold are clamped.
const CLAMP_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BaselineError {
    #[error("no first-order solution in region {region} for type {theta}: {detail}")]
    NoSolution {
        theta: f64,
        region: BaselineRegion,
        detail: String,
    },

    #[error("type {theta} lies outside the support [{lower}, {upper}]")]
    OutOfSupport { theta: f64, lower: f64, upper: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BaselineRegion {
    /// Mechanistic effort only.
    B1,
    /// Both efforts positive.
    B2,
    /// Creative effort only.
    B3,
}

impl fmt::Display for BaselineRegion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            BaselineRegion::B1 => "B1",
            BaselineRegion::B2 => "B2",
            BaselineRegion::B3 => "B3",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaselineThresholds {
    pub theta1_dag: f64,
    pub theta2_dag: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaselinePoint {
    pub theta: f64,
    pub a_dag: f64,
    pub b_dag: f64,
    pub mu_dag: f64,
    pub e_dag: f64,
    pub region: BaselineRegion,
    /// `μ† − c(e†)`.
    pub payoff: f64,
}

/// Root of a function that is decreasing on `[lo, ∞)`.
///
/// Returns `lo` when the function starts non-positive and `None` when it stays
/// positive up to the bracket limit.
fn root_decreasing(f: impl Fn(f64) -> f64, lo: f64) -> Option<f64> {
    if !(f(lo) > 0.0) {
        return Some(lo);
    }
    let mut left = lo;
    let mut hi = lo + 1.0;
    while f(hi) > 0.0 {
        left = hi;
        hi = lo + 2.0 * (hi - lo);
        if hi - lo > MAX_BRACKET {
            return None;
        }
    }
    let mut l = left;
    let mut h = hi;
    for _ in 0..200 {
        let mid = 0.5 * (l + h);
        if mid <= l || mid >= h {
            break;
        }
        if f(mid) > 0.0 {
            l = mid;
        } else {
            h = mid;
        }
    }
    Some(0.5 * (l + h))
}

/// Boundary of the set where `pred` holds, assuming it holds on a lower
/// interval of `[lo, hi]`. `-∞` if it fails at `lo`, `+∞` if it holds at `hi`.
fn sup_of_lower_set(pred: impl Fn(f64) -> bool, lo: f64, hi: f64) -> f64 {
    if !pred(lo) {
        return f64::NEG_INFINITY;
    }
    if pred(hi) {
        return f64::INFINITY;
    }
    let (mut l, mut h) = (lo, hi);
    while h - l > THRESHOLD_TOL {
        let mid = 0.5 * (l + h);
        if pred(mid) {
            l = mid;
        } else {
            h = mid;
        }
    }
    0.5 * (l + h)
}

/// Baseline solver with the thresholds computed once.
#[derive(Debug, Clone)]
pub struct Baseline<'a> {
    scenario: &'a Scenario,
    thresholds: BaselineThresholds,
}

impl<'a> Baseline<'a> {
    pub fn new(scenario: &'a Scenario) -> Self {
        Self {
            scenario,
            thresholds: baseline_thresholds(scenario),
        }
    }

    pub fn thresholds(&self) -> BaselineThresholds {
        self.thresholds
    }

    pub fn region(&self, theta: f64) -> BaselineRegion {
        if theta < self.thresholds.theta1_dag {
            BaselineRegion::B1
        } else if theta > self.thresholds.theta2_dag {
            BaselineRegion::B3
        } else {
            BaselineRegion::B2
        }
    }

    pub fn solve(&self, theta: f64) -> Result<BaselinePoint, BaselineError> {
        let s = self.scenario;
        let (lower, upper) = s.type_support();
        if !(theta >= lower && theta <= upper) {
            return Err(BaselineError::OutOfSupport { theta, lower, upper });
        }
        let region = self.region(theta);
        let fail = |detail: &str| BaselineError::NoSolution {
            theta,
            region,
            detail: detail.to_string(),
        };
        let (a, b) = match region {
            BaselineRegion::B1 => {
                let b = mechanistic_only(s).ok_or_else(|| fail("xi' never meets c'"))?;
                (0.0, b)
            }
            BaselineRegion::B3 => {
                let a = creative_only(s, theta).ok_or_else(|| fail("d nu/da never meets c'"))?;
                (a, 0.0)
            }
            BaselineRegion::B2 => both_efforts(s, theta).map_err(|d| fail(&d))?,
        };
        if !(a.is_finite() && b.is_finite()) {
            return Err(fail("unbounded effort"));
        }
        let mu = s.fitness(a, b, theta);
        let e = a + b;
        Ok(BaselinePoint {
            theta,
            a_dag: a,
            b_dag: b,
            mu_dag: mu,
            e_dag: e,
            region,
            payoff: mu - s.cost().value(e),
        })
    }
}

/// `b†` solving `ξ'(b) = c'(b)`; type-independent.
fn mechanistic_only(s: &Scenario) -> Option<f64> {
    if let Some(k) = s.cost().constant_marginal() {
        let b = s.xi().invert_marginal(k);
        return b.is_finite().then_some(b);
    }
    if let Some(k) = s.xi().constant_marginal() {
        return Some(s.cost().invert_marginal(k));
    }
    root_decreasing(|b| s.xi().marginal(b) - s.cost().marginal(b), 0.0)
}

/// `a†` solving `∂ν/∂a = c'(a)`.
fn creative_only(s: &Scenario, theta: f64) -> Option<f64> {
    let nu = s.nu();
    if let Some(k) = s.cost().constant_marginal() {
        let a = nu.invert_marginal(k, theta);
        return a.is_finite().then_some(a);
    }
    if let Some(m) = nu.constant_marginal(theta) {
        return Some(s.cost().invert_marginal(m));
    }
    root_decreasing(|a| nu.marginal(a, theta) - s.cost().marginal(a), 0.0)
}

/// Interior solution with a common marginal product `m = c'(a + b)`.
fn both_efforts(s: &Scenario, theta: f64) -> Result<(f64, f64), String> {
    let nu = s.nu();
    let xi = s.xi();
    let cost = s.cost();
    let (a, b) = if let Some(m) = nu.constant_marginal(theta) {
        let b = xi.invert_marginal(m);
        (cost.invert_marginal(m) - b, b)
    } else if let Some(k) = xi.constant_marginal() {
        let a = nu.invert_marginal(k, theta);
        (a, cost.invert_marginal(k) - a)
    } else if let Some(k) = cost.constant_marginal() {
        (nu.invert_marginal(k, theta), xi.invert_marginal(k))
    } else {
        // c'(a(m) + b(m)) − m falls as m rises.
        let gap = |m: f64| {
            let e = nu.invert_marginal(m, theta) + xi.invert_marginal(m);
            cost.marginal(e) - m
        };
        let m = root_decreasing(gap, 1e-12).ok_or("no common marginal product")?;
        (nu.invert_marginal(m, theta), xi.invert_marginal(m))
    };
    let clamp = |x: f64| if x < 0.0 && x > -CLAMP_TOL { 0.0 } else { x };
    let (a, b) = (clamp(a), clamp(b));
    if !(a >= 0.0 && b >= 0.0) {
        return Err(format!("negative effort (a = {a}, b = {b})"));
    }
    Ok((a, b))
}

/// `θ₁† = sup{θ : ∂ν/∂a|₀ < ξ'(b†)}` and `θ₂† = inf{θ : ξ'(0) < ∂ν/∂a|_{a†}}`
/// over the type support, with `±∞` when the boundary is not inside it.
pub fn baseline_thresholds(s: &Scenario) -> BaselineThresholds {
    let (lo, hi) = s.type_support();
    let nu = s.nu();
    let xi = s.xi();

    let k1 = match mechanistic_only(s) {
        Some(b) => xi.marginal(b),
        None => xi.marginal_limit(),
    };
    let theta1 = sup_of_lower_set(|t| nu.marginal(0.0, t) < k1, lo, hi);

    let xi0 = xi.marginal(0.0);
    let theta2 = sup_of_lower_set(
        |t| match creative_only(s, t) {
            Some(a) => !(xi0 < nu.marginal(a, t)),
            None => false,
        },
        lo,
        hi,
    );
    BaselineThresholds {
        theta1_dag: theta1,
        theta2_dag: theta2,
    }
}

pub fn solve_baseline(s: &Scenario, theta: f64) -> Result<BaselinePoint, BaselineError> {
    Baseline::new(s).solve(theta)
}
