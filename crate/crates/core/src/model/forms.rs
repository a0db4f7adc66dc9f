//! Functional-form families for the fitness technology and the effort cost.
//!
//! Each family sits behind a trait so that the registry can hand out trait
//! objects by name. The built-in families cover every closed-form example the
//! library ships; all derivatives are analytic.

use std::fmt;

use serde_json::{json, Value};

use super::ModelError;

const BISECT_ITERS: usize = 200;

/// Creative production `ν(a, θ)`.
pub trait ProductionForm: fmt::Debug + Send + Sync {
    fn kind(&self) -> &'static str;

    fn value(&self, a: f64, theta: f64) -> f64;

    /// `∂ν/∂a`.
    fn marginal(&self, a: f64, theta: f64) -> f64;

    /// `∂²ν/∂a∂θ`.
    fn cross_partial(&self, a: f64, theta: f64) -> f64;

    /// `sup_a ν(a, θ)`.
    fn supremum(&self, _theta: f64) -> f64 {
        f64::INFINITY
    }

    /// Smallest type the form is defined for.
    fn min_type(&self) -> f64 {
        0.0
    }

    /// Solves `ν(a, θ) = target` for `a`; `None` when the target is out of reach.
    ///
    /// The default brackets and bisects; built-in forms override it with the
    /// closed-form inverse.
    fn invert(&self, target: f64, theta: f64) -> Option<f64> {
        if target <= 0.0 {
            return Some(0.0);
        }
        if target >= self.supremum(theta) {
            return None;
        }
        let mut hi = 1.0;
        while self.value(hi, theta) < target {
            hi *= 2.0;
            if !hi.is_finite() || hi > 1e300 {
                return None;
            }
        }
        Some(bisect_increasing(|a| self.value(a, theta) - target, 0.0, hi))
    }

    /// `Some(m)` when `∂ν/∂a` does not depend on `a`.
    fn constant_marginal(&self, _theta: f64) -> Option<f64> {
        None
    }

    /// Solves `∂ν/∂a = m`. Returns `0` when `m` is at or above the marginal at
    /// zero and `+∞` when the marginal never falls to `m`.
    fn invert_marginal(&self, m: f64, theta: f64) -> f64 {
        if m >= self.marginal(0.0, theta) {
            return 0.0;
        }
        let mut hi = 1.0;
        while self.marginal(hi, theta) > m {
            hi *= 2.0;
            if hi > 1e300 {
                return f64::INFINITY;
            }
        }
        bisect_increasing(|a| m - self.marginal(a, theta), 0.0, hi)
    }

    fn params(&self) -> Value;
}

/// Mechanistic production `ξ(b)`.
pub trait MechanizationForm: fmt::Debug + Send + Sync {
    fn kind(&self) -> &'static str;

    fn value(&self, b: f64) -> f64;

    fn marginal(&self, b: f64) -> f64;

    /// `lim_{b→∞} ξ'(b)`.
    fn marginal_limit(&self) -> f64;

    fn invert(&self, target: f64) -> f64;

    fn constant_marginal(&self) -> Option<f64> {
        None
    }

    /// Solves `ξ'(b) = m` with the same conventions as
    /// [`ProductionForm::invert_marginal`].
    fn invert_marginal(&self, m: f64) -> f64;

    fn params(&self) -> Value;
}

/// Cost of total effort `c(e)`.
pub trait CostForm: fmt::Debug + Send + Sync {
    fn kind(&self) -> &'static str;

    fn value(&self, e: f64) -> f64;

    fn marginal(&self, e: f64) -> f64;

    fn constant_marginal(&self) -> Option<f64> {
        None
    }

    /// Solves `c'(e) = m`; `0` when `m ≤ c'(0)`.
    fn invert_marginal(&self, m: f64) -> f64;

    fn params(&self) -> Value;
}

/// Bisection for a function that is negative at `lo` and non-negative at `hi`.
pub(crate) fn bisect_increasing(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..BISECT_ITERS {
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

/// `ν = θ·a`.
#[derive(Debug, Clone, Copy, Default)]
pub struct LinearProduction;

impl ProductionForm for LinearProduction {
    fn kind(&self) -> &'static str {
        "linear"
    }

    fn value(&self, a: f64, theta: f64) -> f64 {
        theta * a
    }

    fn marginal(&self, _a: f64, theta: f64) -> f64 {
        theta
    }

    fn cross_partial(&self, _a: f64, _theta: f64) -> f64 {
        1.0
    }

    fn invert(&self, target: f64, theta: f64) -> Option<f64> {
        if target <= 0.0 {
            Some(0.0)
        } else if theta > 0.0 {
            Some(target / theta)
        } else {
            None
        }
    }

    fn constant_marginal(&self, theta: f64) -> Option<f64> {
        Some(theta)
    }

    fn invert_marginal(&self, m: f64, theta: f64) -> f64 {
        if m >= theta {
            0.0
        } else {
            f64::INFINITY
        }
    }

    fn params(&self) -> Value {
        json!({ "kind": "linear" })
    }
}

/// `ν = θ·a^α`, `α ∈ (0, 1]`.
#[derive(Debug, Clone, Copy)]
pub struct PowerProduction {
    alpha: f64,
}

impl PowerProduction {
    pub fn new(alpha: f64) -> Result<Self, ModelError> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(ModelError::InvalidParameter {
                form: "production/power",
                detail: format!("alpha must lie in (0, 1], got {alpha}"),
            });
        }
        Ok(Self { alpha })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

impl ProductionForm for PowerProduction {
    fn kind(&self) -> &'static str {
        "power"
    }

    fn value(&self, a: f64, theta: f64) -> f64 {
        theta * a.powf(self.alpha)
    }

    fn marginal(&self, a: f64, theta: f64) -> f64 {
        if theta == 0.0 {
            return 0.0;
        }
        if a == 0.0 && self.alpha < 1.0 {
            return f64::INFINITY;
        }
        theta * self.alpha * a.powf(self.alpha - 1.0)
    }

    fn cross_partial(&self, a: f64, _theta: f64) -> f64 {
        if a == 0.0 && self.alpha < 1.0 {
            return f64::INFINITY;
        }
        self.alpha * a.powf(self.alpha - 1.0)
    }

    fn invert(&self, target: f64, theta: f64) -> Option<f64> {
        if target <= 0.0 {
            Some(0.0)
        } else if theta > 0.0 {
            Some((target / theta).powf(1.0 / self.alpha))
        } else {
            None
        }
    }

    fn constant_marginal(&self, theta: f64) -> Option<f64> {
        (self.alpha == 1.0 || theta == 0.0).then_some(theta)
    }

    fn invert_marginal(&self, m: f64, theta: f64) -> f64 {
        if theta == 0.0 || self.alpha == 1.0 {
            return if m >= theta { 0.0 } else { f64::INFINITY };
        }
        if m <= 0.0 {
            return f64::INFINITY;
        }
        (m / (theta * self.alpha)).powf(1.0 / (self.alpha - 1.0))
    }

    fn params(&self) -> Value {
        json!({ "kind": "power", "alpha": self.alpha })
    }
}

/// `ν = θ·(1 − e^{−a})`.
#[derive(Debug, Clone, Copy, Default)]
pub struct SaturatingProduction;

impl ProductionForm for SaturatingProduction {
    fn kind(&self) -> &'static str {
        "saturating"
    }

    fn value(&self, a: f64, theta: f64) -> f64 {
        -theta * (-a).exp_m1()
    }

    fn marginal(&self, a: f64, theta: f64) -> f64 {
        theta * (-a).exp()
    }

    fn cross_partial(&self, a: f64, _theta: f64) -> f64 {
        (-a).exp()
    }

    fn supremum(&self, theta: f64) -> f64 {
        theta
    }

    fn invert(&self, target: f64, theta: f64) -> Option<f64> {
        if target <= 0.0 {
            Some(0.0)
        } else if target < theta {
            Some(-(-target / theta).ln_1p())
        } else {
            None
        }
    }

    fn invert_marginal(&self, m: f64, theta: f64) -> f64 {
        if m >= theta {
            0.0
        } else if m <= 0.0 {
            f64::INFINITY
        } else {
            (theta / m).ln()
        }
    }

    fn params(&self) -> Value {
        json!({ "kind": "saturating" })
    }
}

/// `ξ = b`.
#[derive(Debug, Clone, Copy, Default)]
pub struct LinearMechanization;

impl MechanizationForm for LinearMechanization {
    fn kind(&self) -> &'static str {
        "linear"
    }

    fn value(&self, b: f64) -> f64 {
        b
    }

    fn marginal(&self, _b: f64) -> f64 {
        1.0
    }

    fn marginal_limit(&self) -> f64 {
        1.0
    }

    fn invert(&self, target: f64) -> f64 {
        target.max(0.0)
    }

    fn constant_marginal(&self) -> Option<f64> {
        Some(1.0)
    }

    fn invert_marginal(&self, m: f64) -> f64 {
        if m >= 1.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }

    fn params(&self) -> Value {
        json!({ "kind": "linear" })
    }
}

/// `ξ = b^α`, `α ∈ (0, 1)`.
#[derive(Debug, Clone, Copy)]
pub struct PowerMechanization {
    alpha: f64,
}

impl PowerMechanization {
    pub fn new(alpha: f64) -> Result<Self, ModelError> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(ModelError::InvalidParameter {
                form: "mechanization/power",
                detail: format!("alpha must lie in (0, 1), got {alpha}"),
            });
        }
        Ok(Self { alpha })
    }
}

impl MechanizationForm for PowerMechanization {
    fn kind(&self) -> &'static str {
        "power"
    }

    fn value(&self, b: f64) -> f64 {
        b.powf(self.alpha)
    }

    fn marginal(&self, b: f64) -> f64 {
        if b == 0.0 {
            return f64::INFINITY;
        }
        self.alpha * b.powf(self.alpha - 1.0)
    }

    fn marginal_limit(&self) -> f64 {
        0.0
    }

    fn invert(&self, target: f64) -> f64 {
        target.max(0.0).powf(1.0 / self.alpha)
    }

    fn invert_marginal(&self, m: f64) -> f64 {
        if m <= 0.0 {
            return f64::INFINITY;
        }
        (m / self.alpha).powf(1.0 / (self.alpha - 1.0))
    }

    fn params(&self) -> Value {
        json!({ "kind": "power", "alpha": self.alpha })
    }
}

/// `c = κ·e`.
#[derive(Debug, Clone, Copy)]
pub struct LinearCost {
    kappa: f64,
}

impl LinearCost {
    pub fn new(kappa: f64) -> Result<Self, ModelError> {
        check_kappa("cost/linear", kappa)?;
        Ok(Self { kappa })
    }
}

impl CostForm for LinearCost {
    fn kind(&self) -> &'static str {
        "linear"
    }

    fn value(&self, e: f64) -> f64 {
        self.kappa * e
    }

    fn marginal(&self, _e: f64) -> f64 {
        self.kappa
    }

    fn constant_marginal(&self) -> Option<f64> {
        Some(self.kappa)
    }

    fn invert_marginal(&self, m: f64) -> f64 {
        if m <= self.kappa {
            0.0
        } else {
            f64::INFINITY
        }
    }

    fn params(&self) -> Value {
        json!({ "kind": "linear", "kappa": self.kappa })
    }
}

/// `c = κ·e²`.
#[derive(Debug, Clone, Copy)]
pub struct QuadraticCost {
    kappa: f64,
}

impl QuadraticCost {
    pub fn new(kappa: f64) -> Result<Self, ModelError> {
        check_kappa("cost/quadratic", kappa)?;
        Ok(Self { kappa })
    }
}

impl CostForm for QuadraticCost {
    fn kind(&self) -> &'static str {
        "quadratic"
    }

    fn value(&self, e: f64) -> f64 {
        self.kappa * e * e
    }

    fn marginal(&self, e: f64) -> f64 {
        2.0 * self.kappa * e
    }

    fn invert_marginal(&self, m: f64) -> f64 {
        (m / (2.0 * self.kappa)).max(0.0)
    }

    fn params(&self) -> Value {
        json!({ "kind": "quadratic", "kappa": self.kappa })
    }
}

fn check_kappa(form: &'static str, kappa: f64) -> Result<(), ModelError> {
    if kappa > 0.0 && kappa.is_finite() {
        Ok(())
    } else {
        Err(ModelError::InvalidParameter {
            form,
            detail: format!("kappa must be positive and finite, got {kappa}"),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn central(f: impl Fn(f64) -> f64, x: f64) -> f64 {
        let h = 1e-5 * x.abs().max(1.0);
        (f(x + h) - f(x - h)) / (2.0 * h)
    }

    fn rel_err(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-12)
    }

    fn productions() -> Vec<Box<dyn ProductionForm>> {
        vec![
            Box::new(LinearProduction),
            Box::new(PowerProduction::new(0.5).unwrap()),
            Box::new(PowerProduction::new(0.8).unwrap()),
            Box::new(SaturatingProduction),
        ]
    }

    #[test]
    fn production_vanishes_at_zero_effort() {
        for nu in productions() {
            for theta in [0.0, 0.5, 2.0, 7.0] {
                assert_eq!(nu.value(0.0, theta), 0.0, "{}", nu.kind());
            }
        }
    }

    #[test]
    fn production_derivatives_match_finite_differences() {
        for nu in productions() {
            for &(a, theta) in &[(0.3, 0.7), (1.5, 2.0), (4.0, 5.5)] {
                let fd = central(|x| nu.value(x, theta), a);
                assert!(rel_err(nu.marginal(a, theta), fd) < 1e-6, "{}", nu.kind());
                let fd_cross = central(|t| nu.marginal(a, t), theta);
                assert!(rel_err(nu.cross_partial(a, theta), fd_cross) < 1e-6);
            }
        }
    }

    #[test]
    fn production_inverse_round_trips() {
        for nu in productions() {
            for &(t, theta) in &[(0.4, 1.0), (1.7, 2.5), (3.0, 6.0)] {
                let a = nu.invert(t, theta).unwrap();
                assert!((nu.value(a, theta) - t).abs() < 1e-10, "{}", nu.kind());
            }
        }
        assert_eq!(SaturatingProduction.invert(3.0, 2.0), None);
    }

    #[test]
    fn default_inverse_agrees_with_closed_forms() {
        #[derive(Debug)]
        struct Wrapped(PowerProduction);
        impl ProductionForm for Wrapped {
            fn kind(&self) -> &'static str {
                "wrapped"
            }
            fn value(&self, a: f64, theta: f64) -> f64 {
                self.0.value(a, theta)
            }
            fn marginal(&self, a: f64, theta: f64) -> f64 {
                self.0.marginal(a, theta)
            }
            fn cross_partial(&self, a: f64, theta: f64) -> f64 {
                self.0.cross_partial(a, theta)
            }
            fn params(&self) -> Value {
                Value::Null
            }
        }
        let inner = PowerProduction::new(0.5).unwrap();
        let w = Wrapped(inner);
        let a = w.invert(2.0, 1.5).unwrap();
        assert!((a - inner.invert(2.0, 1.5).unwrap()).abs() < 1e-10);
        let am = w.invert_marginal(0.4, 1.5);
        assert!((am - inner.invert_marginal(0.4, 1.5)).abs() < 1e-9);
    }

    #[test]
    fn mechanization_and_cost_derivatives() {
        let xi = PowerMechanization::new(0.5).unwrap();
        for b in [0.2, 1.0, 9.0] {
            assert!(rel_err(xi.marginal(b), central(|x| xi.value(x), b)) < 1e-6);
            assert!((xi.value(xi.invert(xi.value(b))) - xi.value(b)).abs() < 1e-12);
            assert!((xi.marginal(xi.invert_marginal(xi.marginal(b))) - xi.marginal(b)).abs() < 1e-9);
        }
        assert_eq!(xi.value(0.0), 0.0);
        assert!(xi.marginal(0.0).is_infinite());

        let c = QuadraticCost::new(0.5).unwrap();
        for e in [0.1, 1.0, 3.0] {
            assert!(rel_err(c.marginal(e), central(|x| c.value(x), e)) < 1e-6);
            assert!((c.invert_marginal(c.marginal(e)) - e).abs() < 1e-12);
        }
        assert_eq!(LinearCost::new(2.0).unwrap().value(0.0), 0.0);
    }

    #[test]
    fn parameter_validation() {
        assert!(PowerProduction::new(0.0).is_err());
        assert!(PowerProduction::new(1.2).is_err());
        assert!(PowerMechanization::new(1.0).is_err());
        assert!(QuadraticCost::new(-1.0).is_err());
        assert!(LinearCost::new(f64::NAN).is_err());
    }
}
