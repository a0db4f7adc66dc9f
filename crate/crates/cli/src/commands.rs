use std::collections::BTreeSet;
use std::fs;
use std::path::Path;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use contestlab::baseline::Baseline;
use contestlab::costmin::cost_curve;
use contestlab::equilibrium::{solve_equilibrium, type_grid, SolverOptions, StrategyProfile};
use contestlab::export::{
    json_number, profile_diagnostics, thresholds_json, write_baseline, write_contests, write_cost_curve, write_panel,
    write_profile, write_sweep, write_verdicts,
};
use contestlab::golden::{check_example, ExampleReport};
use contestlab::hacking::{skewness_sweep, HackingAnalysis, HackingError};
use contestlab::model::{validate_assumptions, CheckStatus, Example, PrizeVector, Registry, Scenario, ScenarioConfig};
use contestlab::simulate::{
    fe_ols, mann_kendall, panel_data, panel_regressions, simulate_contests, solve_designs, PanelData, PanelSpec,
    PipelineClaims, PipelineConfig, PipelineOutput, SimulateError,
};
use serde_json::json;

use crate::manifest::{Outputs, RunManifest};
use crate::{Cli, Command, GlobalArgs, Unconverged};

pub fn dispatch(cli: Cli) -> Result<()> {
    if let Command::Replay { manifest } = &cli.command {
        return replay(manifest, &cli.global);
    }
    run(cli, None, None)
}

fn replay(path: &Path, global: &GlobalArgs) -> Result<()> {
    let manifest = RunManifest::read(path)?;
    let mut cli = manifest.invocation;
    cli.global.out = Some(
        global
            .out
            .clone()
            .ok_or_else(|| anyhow!("replay needs --out for the reproduced outputs"))?,
    );
    cli.global.threads = global.threads;
    run(cli, manifest.scenario, manifest.pipeline)
}

fn load_config(path: &Path) -> Result<ScenarioConfig> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    ScenarioConfig::from_json(&text).with_context(|| format!("scenario {}", path.display()))
}

fn solver_options(g: &GlobalArgs) -> SolverOptions {
    let mut o = SolverOptions::default();
    if let Some(n) = g.grid {
        o.grid = n;
    }
    if let Some(t) = g.tol {
        o.tol = t;
    }
    if let Some(d) = g.damping {
        o.damping = d;
    }
    if let Some(n) = g.max_iter {
        o.max_iter = n;
    }
    o
}

fn needs_scenario(cmd: &Command) -> bool {
    !matches!(cmd, Command::Mk { .. } | Command::Regress { .. } | Command::Examples)
}

/// Outcome of a command that ran to completion; `Some` when a solver
/// stopped short of its tolerance after writing its outputs.
type Finished = Option<Unconverged>;

struct Run<'a> {
    cli: &'a Cli,
    scenario: Option<Scenario>,
    solver: SolverOptions,
    out: Outputs,
    manifest: RunManifest,
}

fn run(cli: Cli, embedded: Option<ScenarioConfig>, pipeline: Option<PipelineConfig>) -> Result<()> {
    let start = Instant::now();
    let config = match embedded {
        Some(c) => Some(c),
        None => cli.global.scenario.as_deref().map(load_config).transpose()?,
    };
    if config.is_none() && needs_scenario(&cli.command) {
        bail!("`{}` needs --scenario", cli.command.name());
    }
    let scenario = config
        .as_ref()
        .map(|c| Scenario::from_config(c, &Registry::builtin()))
        .transpose()
        .context("building the scenario")?;
    let solver = solver_options(&cli.global);
    let manifest = RunManifest {
        command: cli.command.name().to_string(),
        scenario_path: cli.global.scenario.clone(),
        invocation: cli.clone(),
        scenario: config.map(|c| c.resolved()),
        solver: Some(solver.clone()),
        pipeline,
        seed: cli.global.seed,
        version: env!("CARGO_PKG_VERSION").to_string(),
        outputs: Vec::new(),
        duration_secs: 0.0,
    };
    let mut r = Run {
        cli: &cli,
        scenario,
        solver,
        out: Outputs::new(cli.global.out.clone())?,
        manifest,
    };
    let finished = r.execute()?;
    r.out.finish(r.manifest, start.elapsed())?;
    match finished {
        Some(u) => Err(u.into()),
        None => Ok(()),
    }
}

fn with_prizes(s: &Scenario, prizes: &Option<Vec<f64>>) -> Result<Scenario> {
    Ok(match prizes {
        Some(p) => s.with_prizes(PrizeVector::new(p.clone())?),
        None => s.clone(),
    })
}

fn unconverged(what: &str, p: &StrategyProfile) -> Finished {
    (!p.converged).then(|| Unconverged {
        what: what.to_string(),
        residual: p.residual,
    })
}

impl Run<'_> {
    fn scenario(&self) -> &Scenario {
        self.scenario.as_ref().expect("checked before dispatch")
    }

    fn execute(&mut self) -> Result<Finished> {
        let cmd = self.cli.command.clone();
        match cmd {
            Command::Validate { resolution } => self.validate(resolution),
            Command::Cost { theta, mu_max, points } => self.cost(theta, mu_max, points),
            Command::Baseline { points } => self.baseline(points),
            Command::Equilibrium { prizes } => self.equilibrium(&prizes),
            Command::Hacking { prizes, force } => self.hacking(&prizes, force),
            Command::Sweep { prizes, tolerance } => self.sweep(&prizes, tolerance),
            Command::Simulate { pipeline, contests } => self.simulate(pipeline.as_deref(), contests),
            Command::Mk { input, column } => self.mk(&input, &column),
            Command::Regress {
                input,
                outcome,
                regressors,
                group,
                dummies,
                interact,
            } => self.regress(&input, outcome, regressors, group, dummies, interact),
            Command::Examples => self.examples(),
            Command::Replay { .. } => bail!("a manifest cannot replay another replay"),
        }
    }

    fn validate(&mut self, resolution: usize) -> Result<Finished> {
        let report = validate_assumptions(self.scenario(), resolution);
        for c in &report.checks {
            let tag = match c.status {
                CheckStatus::Pass => "PASS",
                CheckStatus::Warn => "WARN",
            };
            println!("{tag} {}: {}", c.id, c.detail);
        }
        self.out.json("validation.json", &report)?;
        Ok(None)
    }

    fn cost(&mut self, theta: Vec<f64>, mu_max: f64, points: usize) -> Result<Finished> {
        if points < 2 || !(mu_max > 0.0) {
            bail!("cost needs at least two points and a positive --mu-max");
        }
        let s = self.scenario();
        let thetas = if theta.is_empty() {
            let (lo, hi) = s.type_support();
            (1..=5).map(|k| lo + (hi - lo) * k as f64 / 6.0).collect()
        } else {
            theta
        };
        let grid: Vec<f64> = (0..points).map(|i| mu_max * i as f64 / (points - 1) as f64).collect();
        let mut rows = Vec::new();
        for &t in &thetas {
            rows.extend(cost_curve(s, t, &grid)?);
        }
        println!("{} cost points for {} types", rows.len(), thetas.len());
        self.out.file("cost_curve.csv", |w| Ok(write_cost_curve(w, &rows)?))?;
        Ok(None)
    }

    fn baseline(&mut self, points: usize) -> Result<Finished> {
        let s = self.scenario();
        let base = Baseline::new(s);
        let pts = type_grid(s, points)
            .into_iter()
            .map(|t| base.solve(t))
            .collect::<Result<Vec<_>, _>>()?;
        let th = base.thresholds();
        println!("theta1_dag={} theta2_dag={}", th.theta1_dag, th.theta2_dag);
        self.out.file("baseline.csv", |w| Ok(write_baseline(w, &pts)?))?;
        self.out.json("thresholds.json", &thresholds_json(&th))?;
        Ok(None)
    }

    fn equilibrium(&mut self, prizes: &Option<Vec<f64>>) -> Result<Finished> {
        let s = with_prizes(self.scenario(), prizes)?;
        let p = solve_equilibrium(&s, &self.solver)?;
        println!(
            "converged={} iterations={} residual={:.3e} fixed_point_residual={:.3e}",
            p.converged, p.iterations, p.residual, p.fixed_point_residual
        );
        self.out.file("profile.csv", |w| Ok(write_profile(w, &s, &p)?))?;
        let mut diag = profile_diagnostics(&p);
        diag["prizes"] = json!(s.prizes().as_slice());
        self.out.json("diagnostics.json", &diag)?;
        Ok(unconverged("equilibrium", &p))
    }

    fn hacking(&mut self, prizes: &Option<Vec<f64>>, force: bool) -> Result<Finished> {
        let s = with_prizes(self.scenario(), prizes)?;
        let p = solve_equilibrium(&s, &self.solver)?;
        if !p.converged && !force {
            self.out.json("diagnostics.json", &profile_diagnostics(&p))?;
            return Ok(unconverged("equilibrium", &p));
        }
        let analysis = HackingAnalysis::new(&s, &p, force)?;
        let verdicts = analysis.verdicts()?;
        let th = analysis.thresholds();
        let star = analysis.theta1_star();
        let measure = analysis.hacking_measure()?;
        let violations = analysis.region_violations(1e-5, 1e-6)?;
        println!(
            "theta1_star={star} theta1_dag={} theta2_dag={} hacking_measure={measure:.6} hacking_types={}/{}",
            th.theta1_dag,
            th.theta2_dag,
            verdicts.iter().filter(|v| v.hacks).count(),
            verdicts.len()
        );
        self.out.file("verdicts.jsonl", |w| Ok(write_verdicts(w, &verdicts)?))?;
        let summary = json!({
            "theta1_star": json_number(star),
            "theta1_dag": json_number(th.theta1_dag),
            "theta2_dag": json_number(th.theta2_dag),
            "hacking_measure": measure,
            "region_violations": violations,
            "equilibrium": profile_diagnostics(&p),
        });
        self.out.json("summary.json", &summary)?;
        Ok(unconverged("equilibrium", &p))
    }

    fn sweep(&mut self, prizes: &[String], tolerance: f64) -> Result<Finished> {
        let vectors = prizes
            .iter()
            .map(|text| {
                let values = text
                    .split(',')
                    .map(|x| x.trim().parse::<f64>())
                    .collect::<Result<Vec<_>, _>>()
                    .with_context(|| format!("prize vector {text:?}"))?;
                Ok(PrizeVector::new(values)?)
            })
            .collect::<Result<Vec<_>>>()?;
        let sweep = match skewness_sweep(self.scenario(), &vectors, &self.solver, tolerance) {
            Err(HackingError::Unconverged { residual }) => {
                return Ok(Some(Unconverged {
                    what: "a sweep equilibrium".into(),
                    residual,
                }))
            }
            other => other?,
        };
        for (i, e) in sweep.entries.iter().enumerate() {
            println!(
                "prizes[{i}]={} theta1_star={} hacking_measure={:.6}",
                e.prizes, e.theta1_star, e.hacking_measure
            );
        }
        println!("violations={}", sweep.violations.len());
        self.out.file("sweep.csv", |w| Ok(write_sweep(w, &sweep.rows)?))?;
        let summary = json!({
            "entries": sweep.entries.iter().map(|e| json!({
                "prizes": e.prizes.as_slice(),
                "theta1_star": json_number(e.theta1_star),
                "hacking_measure": e.hacking_measure,
                "equilibrium": profile_diagnostics(&e.profile),
            })).collect::<Vec<_>>(),
            "violations": sweep.violations,
            "tolerance": sweep.tolerance,
        });
        self.out.json("summary.json", &summary)?;
        Ok(None)
    }

    fn simulate(&mut self, path: Option<&Path>, contests: Option<usize>) -> Result<Finished> {
        let mut config = match (&self.manifest.pipeline, path) {
            (Some(c), _) => c.clone(),
            (None, Some(p)) => {
                let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                serde_json::from_str(&text).with_context(|| format!("pipeline configuration {}", p.display()))?
            }
            (None, None) => PipelineConfig::default(),
        };
        if let Some(n) = contests {
            config.contests = n;
        }
        self.manifest.pipeline = Some(config.clone());
        let s = self.scenario().clone();
        let seed = self.cli.global.seed;
        let profiles = match solve_designs(&s, &config, &self.solver) {
            Err(SimulateError::Unconverged) => {
                return Ok(Some(Unconverged {
                    what: "a prize-design equilibrium".into(),
                    residual: f64::NAN,
                }))
            }
            other => other?,
        };
        let (outcomes, panel) = simulate_contests(&s, &config, &profiles, seed)?;
        let mut data = panel_data(&panel)?;
        let regressions = panel_regressions(&mut data, config.type_levels, &config.fitness_column)?;
        let claims = PipelineClaims::evaluate(&regressions);
        println!(
            "contests={} rows={} fitness_increasing={} mk_increasing={} interactions_positive={}",
            outcomes.len(),
            panel.len(),
            claims.fitness_increasing,
            claims.mk_increasing,
            claims.interactions_positive
        );
        let designs: Vec<_> = config
            .designs
            .iter()
            .zip(&profiles)
            .map(|(d, p)| {
                json!({
                    "total": d.total,
                    "count": d.count,
                    "prize_skew": d.skew(),
                    "equilibrium": profile_diagnostics(p),
                })
            })
            .collect();
        self.out.file("contests.csv", |w| Ok(write_contests(w, &outcomes)?))?;
        self.out.file("panel.csv", |w| Ok(write_panel(w, &panel)?))?;
        self.out.json("designs.json", &designs)?;
        self.out.json(
            "regressions.json",
            &PipelineOutput {
                seed,
                regressions,
                claims,
            },
        )?;
        Ok(None)
    }

    fn mk(&mut self, input: &Path, column: &str) -> Result<Finished> {
        let mut reader = csv::Reader::from_path(input).with_context(|| format!("reading {}", input.display()))?;
        let idx = reader
            .headers()?
            .iter()
            .position(|h| h == column)
            .ok_or_else(|| anyhow!("{} has no column {column:?}", input.display()))?;
        let mut series = Vec::new();
        for (line, record) in reader.records().enumerate() {
            let record = record?;
            let field = record.get(idx).unwrap_or("");
            let v: f64 = field
                .trim()
                .parse()
                .with_context(|| format!("row {}: {field:?} is not a number", line + 2))?;
            series.push(v);
        }
        let mk = mann_kendall(&series)?;
        println!("n={} S={} variance={} Z={:.6}", series.len(), mk.s, mk.variance, mk.z);
        let summary = json!({
            "input": input,
            "column": column,
            "n": series.len(),
            "S": mk.s,
            "variance": mk.variance,
            "Z": mk.z,
        });
        self.out.json("mk.json", &summary)?;
        Ok(None)
    }

    fn regress(
        &mut self,
        input: &Path,
        outcome: String,
        mut regressors: Vec<String>,
        group: String,
        dummies: Option<String>,
        interact: Vec<String>,
    ) -> Result<Finished> {
        let mut data = PanelData::from_csv(input).with_context(|| format!("reading {}", input.display()))?;
        if let Some(col) = dummies {
            let levels: BTreeSet<i64> = data.column(&col)?.iter().map(|v| v.round() as i64).collect();
            let levels: Vec<i64> = levels.into_iter().skip(1).collect();
            let names = data.add_dummies(&col, &levels, "T")?;
            let mut products = Vec::new();
            for c in &interact {
                for d in &names {
                    products.push(data.add_interaction(d, c)?);
                }
            }
            regressors.extend(names);
            regressors.extend(products);
        } else if !interact.is_empty() {
            bail!("--interact needs --dummies");
        }
        let fit = fe_ols(
            &data,
            &PanelSpec {
                outcome,
                regressors,
                group,
            },
        )?;
        for ((name, c), se) in fit.regressors.iter().zip(&fit.coefficients).zip(&fit.std_errors) {
            println!("{name:>24} {c:>12.6} ({se:.6})");
        }
        println!("n={} groups={} within_r2={:.4}", fit.observations, fit.groups, fit.r_squared);
        self.out.json("regression.json", &fit)?;
        Ok(None)
    }

    fn examples(&mut self) -> Result<Finished> {
        let selected: Vec<Example> = match &self.manifest.scenario {
            Some(cfg) => {
                let e = Example::ALL
                    .into_iter()
                    .find(|e| {
                        let b = e.config();
                        b.nu == cfg.nu && b.xi == cfg.xi && b.cost == cfg.cost && b.types == cfg.types
                    })
                    .ok_or_else(|| anyhow!("the scenario does not match a built-in example"))?;
                vec![e]
            }
            None => Example::ALL.to_vec(),
        };
        let mut reports: Vec<ExampleReport> = Vec::new();
        for e in selected {
            let r = check_example(e, &self.solver)?;
            let star = r.theta1_star.map(|t| format!(" theta1_star={t:.6}")).unwrap_or_default();
            println!(
                "example {}: theta1_dag={} theta2_dag={}{star} {}",
                r.example,
                r.theta1_dag,
                r.theta2_dag,
                if r.pass() { "PASS" } else { "FAIL" }
            );
            for c in r.checks.iter().filter(|c| !c.pass) {
                println!("  {}: expected {}, got {}", c.quantity, c.expected, c.actual);
            }
            reports.push(r);
        }
        let summary: Vec<_> = reports
            .iter()
            .map(|r| {
                json!({
                    "example": r.example,
                    "theta1_dag": json_number(r.theta1_dag),
                    "theta2_dag": json_number(r.theta2_dag),
                    "theta1_star": r.theta1_star.map(json_number),
                    "pass": r.pass(),
                    "checks": r.checks.iter().map(|c| json!({
                        "quantity": c.quantity,
                        "expected": json_number(c.expected),
                        "actual": json_number(c.actual),
                        "tolerance": c.tolerance,
                        "relative": c.relative,
                        "pass": c.pass,
                    })).collect::<Vec<_>>(),
                })
            })
            .collect();
        self.out.json("examples.json", &summary)?;
        if reports.iter().all(ExampleReport::pass) {
            Ok(None)
        } else {
            bail!("golden checks failed")
        }
    }
}
