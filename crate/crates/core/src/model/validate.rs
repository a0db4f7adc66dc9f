//! Grid checks of the modelling assumptions.
//!
//! Violations are reported as warnings; solving a scenario that fails a check
//! is still allowed.

use serde::Serialize;

use super::Scenario;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckStatus {
    Pass,
    Warn,
}

#[derive(Debug, Clone, Serialize)]
pub struct AssumptionCheck {
    pub id: &'static str,
    pub status: CheckStatus,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<AssumptionCheck>,
}

impl ValidationReport {
    pub fn get(&self, id: &str) -> Option<&AssumptionCheck> {
        self.checks.iter().find(|c| c.id == id)
    }

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.status == CheckStatus::Pass)
    }

    pub fn warnings(&self) -> impl Iterator<Item = &AssumptionCheck> {
        self.checks.iter().filter(|c| c.status == CheckStatus::Warn)
    }
}

fn check(id: &'static str, ok: bool, detail: String) -> AssumptionCheck {
    AssumptionCheck {
        id,
        status: if ok { CheckStatus::Pass } else { CheckStatus::Warn },
        detail,
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    let n = n.max(2);
    (0..n).map(move |i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
}

/// Checks every assumption on deterministic grids with `resolution` points
/// per axis.
///
/// Ids: `A1` supermodularity, `A2` stochastic dominance of the noise family,
/// `A3-boundary` for `ξ'(0) > c'(0)`, `A3-lower` and `A3-upper` for the
/// limiting marginal products at the ends of the type support, `xi-limit` for
/// `ξ'(b) → 0`, and `F-density` for an atomless type distribution.
pub fn validate_assumptions(s: &Scenario, resolution: usize) -> ValidationReport {
    let n = resolution.max(3);
    let (lo, hi) = s.type_support();
    let nu = s.nu();
    let mut checks = Vec::with_capacity(7);

    let h = 1e-4;
    let mut worst = f64::INFINITY;
    let mut failures = 0usize;
    for theta in linspace(lo, hi - h, n) {
        for a in linspace(0.05, 5.0, n) {
            let d = nu.value(a + h, theta + h) - nu.value(a + h, theta) - nu.value(a, theta + h)
                + nu.value(a, theta);
            let cross = d / (h * h);
            let increasing = nu.value(a + h, theta) > nu.value(a, theta) || theta == 0.0;
            worst = worst.min(cross);
            if !(cross > 0.0) || !increasing {
                failures += 1;
            }
        }
    }
    checks.push(check(
        "A1",
        failures == 0,
        format!("{failures} of {} grid points fail; minimum cross partial {worst:.3e}", n * n),
    ));

    let noise = s.noise();
    let mut fosd_failures = 0usize;
    let means = [0.0, 1.0, 2.0];
    for pair in means.windows(2) {
        for x in linspace(-5.0, 10.0, 4 * n) {
            if noise.cdf(x, pair[1]) > noise.cdf(x, pair[0]) + 1e-12 {
                fosd_failures += 1;
            }
        }
    }
    let support_note = if noise.full_line_support() {
        "performance support is the whole real line rather than the non-negative half-line"
    } else {
        "performance support is the non-negative half-line"
    };
    checks.push(check(
        "A2",
        fosd_failures == 0,
        format!(
            "{} noise, means {{0, 1, 2}}, s in [-5, 10]: {fosd_failures} dominance violations; {support_note}",
            noise.kind()
        ),
    ));

    let xi0 = s.xi().marginal(0.0);
    let c0 = s.cost().marginal(0.0);
    checks.push(check("A3-boundary", xi0 > c0, format!("xi'(0) = {xi0}, c'(0) = {c0}")));

    let low = nu.marginal(0.0, lo);
    checks.push(check(
        "A3-lower",
        low < c0,
        format!("d nu/da at a = 0, lowest type {lo}: {low} versus c'(0) = {c0}"),
    ));

    let high = nu.marginal(0.0, hi);
    let upper_ok = high > xi0 || (high.is_infinite() && xi0.is_infinite());
    checks.push(check(
        "A3-upper",
        upper_ok,
        format!("d nu/da at a = 0, highest type {hi}: {high} versus xi'(0) = {xi0}"),
    ));

    let limit = s.xi().marginal_limit();
    checks.push(check(
        "xi-limit",
        limit == 0.0,
        format!("xi'(b) tends to {limit} as b grows"),
    ));

    let atomless = s.types().atoms().is_none();
    checks.push(check(
        "F-density",
        atomless,
        if atomless {
            format!("{} types with a bounded density", s.types().kind())
        } else {
            "discrete types have atoms".to_string()
        },
    ));

    ValidationReport { checks }
}
