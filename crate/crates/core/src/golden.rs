//! Closed-form checks for the four built-in examples.

use serde::Serialize;
use thiserror::Error;

use crate::baseline::{Baseline, BaselineError};
use crate::costmin::{optimal_allocation, CostError};
use crate::equilibrium::{solve_equilibrium, EquilibriumError, SolverOptions};
use crate::hacking::hacking_threshold;
use crate::hacking::HackingError;
use crate::model::{Example, Scenario};

/// Absolute tolerance for closed-form values.
pub const GOLDEN_TOL: f64 = 1e-4;
/// Relative tolerance for the equilibrium effort ratio of Example 2.
pub const RATIO_TOL: f64 = 0.01;

#[derive(Debug, Error)]
pub enum GoldenError {
    #[error(transparent)]
    Baseline(#[from] BaselineError),
    #[error(transparent)]
    Cost(#[from] CostError),
    #[error(transparent)]
    Equilibrium(#[from] EquilibriumError),
    #[error(transparent)]
    Hacking(#[from] HackingError),
}

#[derive(Debug, Clone, Serialize)]
pub struct GoldenCheck {
    pub quantity: String,
    pub expected: f64,
    pub actual: f64,
    pub tolerance: f64,
    pub relative: bool,
    pub pass: bool,
}

impl GoldenCheck {
    fn new(quantity: String, expected: f64, actual: f64, tolerance: f64, relative: bool) -> Self {
        let pass = if expected.is_infinite() {
            actual == expected
        } else if relative {
            ((actual - expected) / expected).abs() <= tolerance
        } else {
            (actual - expected).abs() <= tolerance
        };
        Self {
            quantity,
            expected,
            actual,
            tolerance,
            relative,
            pass,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ExampleReport {
    pub example: usize,
    pub theta1_dag: f64,
    pub theta2_dag: f64,
    /// Only computed where the example pins it down.
    pub theta1_star: Option<f64>,
    pub checks: Vec<GoldenCheck>,
}

impl ExampleReport {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

struct Checks(Vec<GoldenCheck>);

impl Checks {
    fn abs(&mut self, q: impl Into<String>, expected: f64, actual: f64) {
        self.0.push(GoldenCheck::new(q.into(), expected, actual, GOLDEN_TOL, false));
    }

    fn rel(&mut self, q: impl Into<String>, expected: f64, actual: f64) {
        self.0.push(GoldenCheck::new(q.into(), expected, actual, RATIO_TOL, true));
    }
}

fn baseline_triples(
    c: &mut Checks,
    s: &Scenario,
    thetas: &[f64],
    closed: impl Fn(f64) -> (f64, f64, f64),
) -> Result<(), GoldenError> {
    let base = Baseline::new(s);
    for &t in thetas {
        let p = base.solve(t)?;
        let (mu, a, b) = closed(t);
        c.abs(format!("mu_dag({t})"), mu, p.mu_dag);
        c.abs(format!("a_dag({t})"), a, p.a_dag);
        c.abs(format!("b_dag({t})"), b, p.b_dag);
    }
    Ok(())
}

/// Runs the closed-form checks of one example. Examples 1 and 2 solve an
/// equilibrium with the example's prize vector.
pub fn check_example(example: Example, options: &SolverOptions) -> Result<ExampleReport, GoldenError> {
    let s = example.scenario();
    let th = Baseline::new(&s).thresholds();
    let mut c = Checks(Vec::new());
    let mut theta1_star = None;
    match example {
        Example::PerfectSubstitutes => {
            c.abs("theta1_dag", 1.0, th.theta1_dag);
            c.abs("theta2_dag", 1.0, th.theta2_dag);
            baseline_triples(&mut c, &s, &[0.25, 0.5, 0.9, 1.5, 2.0, 3.0], |t| {
                if t >= 1.0 {
                    (t * t, t, 0.0)
                } else {
                    (1.0, 0.0, 1.0)
                }
            })?;
            let profile = solve_equilibrium(&s, options)?;
            let star = hacking_threshold(&profile, &s)?;
            c.abs("theta1_star", 1.0, star);
            theta1_star = Some(star);
        }
        Example::CobbDouglas => {
            baseline_triples(&mut c, &s, &[0.5, 1.0, 2.0, 4.0, 8.0], |t| {
                (0.5 * t * t + 0.5, 0.25 * t * t, 0.25)
            })?;
            let profile = solve_equilibrium(&s, options)?;
            for t in [0.5, 1.0, 2.0, 4.0] {
                let p = profile.allocation_at(&s, t)?;
                c.rel(format!("a_star/b_star({t})"), t * t, p.allocation.a / p.allocation.b);
            }
        }
        Example::ConcaveMechanization => {
            c.abs("theta1_dag", 0.5f64.powf(2.0 / 3.0), th.theta1_dag);
            c.abs("theta2_dag", f64::INFINITY, th.theta2_dag);
            for (t, mu) in [(0.2, 0.5f64), (0.3, 1.2), (0.5, 0.9), (0.6, 0.3)] {
                c.abs(format!("C({mu},{t})"), 0.5 * mu.powi(4), optimal_allocation(&s, mu, t)?.cost);
            }
        }
        Example::Saturating => {
            c.abs("theta1_dag", 1.0, th.theta1_dag);
            c.abs("theta2_dag", std::f64::consts::E.powi(2), th.theta2_dag);
            for (t, mu) in [(1.5f64, 1.0), (2.0, 3.0), (4.0, 4.0), (7.0, 9.0)] {
                let e = mu - t + 1.0 + f64::ln(t);
                c.abs(format!("C({mu},{t})"), 0.25 * e * e, optimal_allocation(&s, mu, t)?.cost);
            }
        }
    }
    Ok(ExampleReport {
        example: example.number(),
        theta1_dag: th.theta1_dag,
        theta2_dag: th.theta2_dag,
        theta1_star,
        checks: c.0,
    })
}
