use contestlab::baseline::Baseline;
use contestlab::costmin::{cost, optimal_allocation};
use contestlab::model::{Example, Scenario};
use proptest::prelude::*;

const LATTICE_STEP: f64 = 1e-3;

/// Hand-written primitives of each example: production, inverse of the
/// mechanistic technology and the cost of total effort.
struct Closed {
    nu: fn(f64, f64) -> f64,
    xi_inv: fn(f64) -> f64,
    c: fn(f64) -> f64,
}

fn closed(e: Example) -> Closed {
    match e {
        Example::PerfectSubstitutes => Closed {
            nu: |a, t| t * a,
            xi_inv: |y| y,
            c: |e| 0.5 * e * e,
        },
        Example::CobbDouglas => Closed {
            nu: |a, t| t * a.sqrt(),
            xi_inv: |y| y * y,
            c: |e| e,
        },
        Example::ConcaveMechanization => Closed {
            nu: |a, t| t * a,
            xi_inv: |y| y * y,
            c: |e| 0.5 * e * e,
        },
        Example::Saturating => Closed {
            nu: |a, t| t * (1.0 - (-a).exp()),
            xi_inv: |y| y,
            c: |e| 0.25 * e * e,
        },
    }
}

/// Brute-force minimum of `c(a + ξ⁻¹(μ − ν(a, θ)))` over `a` on a lattice.
/// Returns the lattice minimum and the largest cost change to a neighbour
/// of the minimizing point.
fn lattice_cost(e: Example, mu: f64, theta: f64) -> (f64, f64) {
    let f = closed(e);
    let value = |a: f64| {
        let rest = (mu - (f.nu)(a, theta)).max(0.0);
        (f.c)(a + (f.xi_inv)(rest))
    };
    // The creative corner `ν(a, θ) = μ` joins the lattice exactly.
    let reachable = (f.nu)(60.0, theta) >= mu;
    let a_end = if reachable {
        let (mut lo, mut hi) = (0.0, 60.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if (f.nu)(mid, theta) >= mu {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    } else {
        60.0
    };
    let mut vals: Vec<f64> = (0..)
        .map(|k| k as f64 * LATTICE_STEP)
        .take_while(|&a| a < a_end)
        .map(value)
        .collect();
    if reachable {
        vals.push((f.c)(a_end));
    }
    let (k, best) = vals
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, &v)| if v < acc.1 { (i, v) } else { acc });
    let mut slack: f64 = 0.0;
    if k > 0 {
        slack = slack.max((vals[k - 1] - best).abs());
    }
    if k + 1 < vals.len() {
        slack = slack.max((vals[k + 1] - best).abs());
    }
    (best, slack)
}

fn scenario(i: usize) -> (Example, Scenario) {
    let e = Example::ALL[i];
    (e, e.scenario())
}

fn tol(c: f64) -> f64 {
    1e-8 * (1.0 + c.abs())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn least_cost_matches_lattice(i in 0usize..4, theta in 0.1f64..3.0, mu in 0.01f64..3.0) {
        let (e, s) = scenario(i);
        let c = cost(&s, mu, theta).unwrap();
        let (lat, slack) = lattice_cost(e, mu, theta);
        prop_assert!(c <= lat + tol(c), "C={c} lattice={lat}");
        prop_assert!(lat - c <= slack + tol(c), "C={c} lattice={lat} step change={slack}");
    }

    #[test]
    fn convex_in_fitness(i in 0usize..4, theta in 0.05f64..3.0, mu in 0.0f64..4.0, h in 0.001f64..1.0) {
        let (_, s) = scenario(i);
        let lo = cost(&s, mu, theta).unwrap();
        let mid = cost(&s, mu + h, theta).unwrap();
        let hi = cost(&s, mu + 2.0 * h, theta).unwrap();
        prop_assert!(mid <= 0.5 * (lo + hi) + tol(hi));
    }

    #[test]
    fn increasing_differences(
        i in 0usize..4,
        t1 in 0.05f64..3.0,
        dt in 0.0f64..2.0,
        mu in 0.0f64..4.0,
        h in 0.001f64..1.0,
    ) {
        let (_, s) = scenario(i);
        let t2 = (t1 + dt).min(3.0);
        let step = |t: f64| cost(&s, mu + h, t).unwrap() - cost(&s, mu, t).unwrap();
        let (d1, d2) = (step(t1), step(t2));
        prop_assert!(d2 <= d1 + tol(d1), "marginal cost rose with type: {d1} -> {d2}");
    }

    #[test]
    fn cheaper_for_higher_types(i in 0usize..4, t1 in 0.05f64..3.0, dt in 0.0f64..2.0, mu in 0.0f64..4.0) {
        let (_, s) = scenario(i);
        let t2 = (t1 + dt).min(3.0);
        let (c1, c2) = (cost(&s, mu, t1).unwrap(), cost(&s, mu, t2).unwrap());
        prop_assert!(c2 <= c1 + tol(c1));
    }

    #[test]
    fn zero_fitness_is_free(i in 0usize..4, theta in 0.0f64..3.0) {
        let (_, s) = scenario(i);
        prop_assert_eq!(cost(&s, 0.0, theta).unwrap(), 0.0);
    }

    #[test]
    fn allocation_produces_the_target(i in 0usize..4, theta in 0.05f64..3.0, mu in 0.0f64..4.0) {
        let (_, s) = scenario(i);
        let p = optimal_allocation(&s, mu, theta).unwrap();
        let made = s.fitness(p.allocation.a, p.allocation.b, theta);
        prop_assert!((made - mu).abs() <= 1e-8 * (1.0 + mu));
    }
}

/// The baseline fitness solves `∂C/∂μ = 1`; checked against a finite
/// difference of the cost and against a grid search of `μ − C(μ, θ)`.
#[test]
fn baseline_equates_marginal_cost_to_one() {
    for e in Example::ALL {
        let s = e.scenario();
        let base = Baseline::new(&s);
        for theta in [0.3, 0.8, 1.5, 2.5] {
            let p = base.solve(theta).unwrap();
            let h = 1e-5;
            let slope = (cost(&s, p.mu_dag + h, theta).unwrap() - cost(&s, p.mu_dag - h, theta).unwrap()) / (2.0 * h);
            assert!((slope - 1.0).abs() < 1e-4, "{e:?} theta={theta} slope={slope}");

            let net = |m: f64| m - cost(&s, m, theta).unwrap();
            let grid_best = (0..=20_000)
                .map(|k| k as f64 * 5e-4)
                .fold(f64::NEG_INFINITY, |acc, m| acc.max(net(m)));
            assert!(net(p.mu_dag) >= grid_best - 1e-9, "{e:?} theta={theta}");
            assert!((p.payoff - net(p.mu_dag)).abs() < 1e-9);
        }
    }
}
