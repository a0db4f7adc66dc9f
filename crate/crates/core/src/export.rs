//! CSV tables and JSON summaries for solver outputs.
//!
//! Tables go through `csv`; floats are written in shortest round-trip form,
//! so equal inputs give byte-identical files.

use std::io::Write;

use serde::Serialize;
use serde_json::{json, Value};

use crate::baseline::{BaselinePoint, BaselineThresholds};
use crate::costmin::{CostError, CostPoint};
use crate::equilibrium::StrategyProfile;
use crate::hacking::{HackingVerdict, SweepRow};
use crate::model::Scenario;
use crate::simulate::{ContestOutcome, PanelRecord};

#[derive(Debug, thiserror::Error)]
pub enum ExportError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Cost(#[from] CostError),
}

/// JSON has no infinities; thresholds at `±∞` are written as the strings
/// `"inf"` and `"-inf"`.
pub fn json_number(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else if x.is_nan() {
        Value::Null
    } else if x > 0.0 {
        json!("inf")
    } else {
        json!("-inf")
    }
}

fn write_rows<W: Write, T: Serialize>(w: W, rows: impl IntoIterator<Item = T>) -> Result<(), ExportError> {
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct CostRow {
    theta: f64,
    mu: f64,
    a: f64,
    b: f64,
    cost: f64,
    #[serde(rename = "dC_dmu")]
    dc_dmu: f64,
    case: String,
}

pub fn write_cost_curve<W: Write>(w: W, points: &[CostPoint]) -> Result<(), ExportError> {
    write_rows(
        w,
        points.iter().map(|p| CostRow {
            theta: p.theta,
            mu: p.mu,
            a: p.allocation.a,
            b: p.allocation.b,
            cost: p.cost,
            dc_dmu: p.dc_dmu,
            case: p.allocation.case.to_string(),
        }),
    )
}

#[derive(Serialize)]
struct BaselineRow {
    theta: f64,
    a_dag: f64,
    b_dag: f64,
    mu_dag: f64,
    region: String,
}

pub fn write_baseline<W: Write>(w: W, points: &[BaselinePoint]) -> Result<(), ExportError> {
    write_rows(
        w,
        points.iter().map(|p| BaselineRow {
            theta: p.theta,
            a_dag: p.a_dag,
            b_dag: p.b_dag,
            mu_dag: p.mu_dag,
            region: p.region.to_string(),
        }),
    )
}

pub fn thresholds_json(t: &BaselineThresholds) -> Value {
    json!({
        "theta1_dag": json_number(t.theta1_dag),
        "theta2_dag": json_number(t.theta2_dag),
    })
}

#[derive(Serialize)]
struct ProfileRow {
    theta: f64,
    mu_star: f64,
    a_star: f64,
    b_star: f64,
    case: String,
}

/// One row per type-grid point with the least-cost efforts behind `μ*`.
pub fn write_profile<W: Write>(w: W, s: &Scenario, profile: &StrategyProfile) -> Result<(), ExportError> {
    let rows = profile
        .theta_grid
        .iter()
        .zip(&profile.mu_star)
        .map(|(&theta, &mu)| {
            let p = crate::costmin::optimal_allocation(s, mu, theta)?;
            Ok(ProfileRow {
                theta,
                mu_star: mu,
                a_star: p.allocation.a,
                b_star: p.allocation.b,
                case: p.allocation.case.to_string(),
            })
        })
        .collect::<Result<Vec<_>, CostError>>()?;
    write_rows(w, rows)
}

pub fn profile_diagnostics(profile: &StrategyProfile) -> Value {
    json!({
        "converged": profile.converged,
        "iterations": profile.iterations,
        "residual": json_number(profile.residual),
        "fixed_point_residual": json_number(profile.fixed_point_residual),
        "grid_points": profile.theta_grid.len(),
    })
}

pub fn write_sweep<W: Write>(w: W, rows: &[SweepRow]) -> Result<(), ExportError> {
    write_rows(w, rows)
}

#[derive(Serialize)]
struct VerdictLine<'a> {
    theta: f64,
    mu_star: f64,
    a_star: f64,
    b_star: f64,
    a_dag: f64,
    b_dag: f64,
    mu_dag: f64,
    hacks: bool,
    region: &'a str,
}

/// One JSON object per line.
pub fn write_verdicts<W: Write>(mut w: W, verdicts: &[HackingVerdict]) -> Result<(), ExportError> {
    for v in verdicts {
        let region = v.region.to_string();
        let line = VerdictLine {
            theta: v.theta,
            mu_star: v.mu_star,
            a_star: v.contest.a,
            b_star: v.contest.b,
            a_dag: v.baseline.a_dag,
            b_dag: v.baseline.b_dag,
            mu_dag: v.baseline.mu_dag,
            hacks: v.hacks,
            region: &region,
        };
        serde_json::to_writer(&mut w, &line)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

#[derive(Serialize)]
struct ContestRow {
    contest_id: u64,
    player_id: usize,
    theta: f64,
    a: f64,
    b: f64,
    mu: f64,
    performance: f64,
    rank: usize,
    prize: f64,
    cost: f64,
    payoff: f64,
}

/// One row per player per contest.
pub fn write_contests<W: Write>(w: W, outcomes: &[ContestOutcome]) -> Result<(), ExportError> {
    write_rows(
        w,
        outcomes.iter().flat_map(|o| {
            o.records.iter().map(move |r| ContestRow {
                contest_id: o.replication,
                player_id: r.player,
                theta: r.theta,
                a: r.a,
                b: r.b,
                mu: r.mu,
                performance: r.performance,
                rank: r.rank,
                prize: r.prize,
                cost: r.cost,
                payoff: r.payoff,
            })
        }),
    )
}

pub fn write_panel<W: Write>(w: W, records: &[PanelRecord]) -> Result<(), ExportError> {
    write_rows(w, records)
}

/// Pretty JSON with a trailing newline.
pub fn write_json<W: Write, T: Serialize + ?Sized>(mut w: W, value: &T) -> Result<(), ExportError> {
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baseline::Baseline;
    use crate::costmin::cost_curve;
    use crate::model::Example;

    fn text(f: impl FnOnce(&mut Vec<u8>)) -> String {
        let mut buf = Vec::new();
        f(&mut buf);
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn cost_curve_columns() {
        let s = Example::PerfectSubstitutes.scenario();
        let pts = cost_curve(&s, 0.5, &[0.0, 1.0]).unwrap();
        let out = text(|b| write_cost_curve(b, &pts).unwrap());
        let mut lines = out.lines();
        assert_eq!(lines.next(), Some("theta,mu,a,b,cost,dC_dmu,case"));
        assert_eq!(out.lines().count(), 3);
        assert!(lines.nth(1).unwrap().ends_with(",C1"));
    }

    #[test]
    fn baseline_columns_and_thresholds() {
        let s = Example::ConcaveMechanization.scenario();
        let base = Baseline::new(&s);
        let pts = vec![base.solve(0.2).unwrap(), base.solve(2.0).unwrap()];
        let out = text(|b| write_baseline(b, &pts).unwrap());
        assert!(out.starts_with("theta,a_dag,b_dag,mu_dag,region\n"));
        assert!(out.contains(",B1\n") && out.contains(",B2\n"));
        let t = thresholds_json(&base.thresholds());
        assert_eq!(t["theta2_dag"], json!("inf"));
    }

    #[test]
    fn non_finite_numbers() {
        assert_eq!(json_number(f64::NEG_INFINITY), json!("-inf"));
        assert_eq!(json_number(f64::NAN), Value::Null);
        assert_eq!(json_number(1.5), json!(1.5));
    }
}
