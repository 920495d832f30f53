use std::path::PathBuf;

use cokdv_core::contraction::{agreement, estimate_lipschitz, solve_by_contraction, SolverReport};
use cokdv_core::dynamics::{convergence_study, integrate, write_trajectory_dir};
use cokdv_core::operators::OperatorId;
use cokdv_core::rng;
use cokdv_core::verify::{
    bounds_csv, dbp_order, lemma_bound, negative_controls, oracle_equivalence, split_identities_with, Corruption,
    Verdict,
};
use cokdv_core::{Error, Result, SobolevIndex};
use serde::Serialize;

use crate::config::{reseed, section, RunConfig, VerifySection};
use crate::output::OutputDir;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_DIVERGENCE: i32 = 2;
pub const EXIT_VERIFY: i32 = 3;
pub const EXIT_CONTRACTION: i32 = 4;

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Divergence { .. } => EXIT_DIVERGENCE,
        Error::BallEscape { .. } | Error::NoConvergence { .. } => EXIT_CONTRACTION,
        _ => EXIT_CONFIG,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Suite {
    Identities,
    Residuals,
    All,
}

/// Everything a command needs besides its output directory.
pub struct Context {
    pub config: RunConfig,
    pub config_path: Option<PathBuf>,
    pub seed: u64,
    /// Set when `--seed` was given explicitly.
    pub seed_override: bool,
    pub quiet: bool,
    pub corruption: Option<Corruption>,
}

impl Context {
    fn note(&self, msg: &str) {
        if !self.quiet {
            eprintln!("cokdv: {msg}");
        }
    }
}

/// Exit code and `key=value` pairs for the summary line.
pub struct Outcome {
    pub exit: i32,
    pub summary: Vec<(String, String)>,
}

impl Outcome {
    fn new(exit: i32) -> Self {
        Outcome { exit, summary: Vec::new() }
    }

    fn kv(mut self, k: &str, v: impl ToString) -> Self {
        self.summary.push((k.to_string(), v.to_string()));
        self
    }
}

pub fn simulate(ctx: &Context, out: &OutputDir) -> Result<Outcome> {
    let mut cfg = section(&ctx.config.simulate, "simulate")?;
    if ctx.seed_override {
        reseed(&mut cfg.initial, ctx.seed);
    }
    ctx.note(&format!("integrating n_max={} to t={}", cfg.n_max, cfg.t_end));
    let (traj, diags) = integrate(&cfg)?;
    write_trajectory_dir(out.path(), &traj, &diags)?;
    let drift = traj.energy_drift();
    out.write_json(
        "summary.json",
        &serde_json::json!({ "samples": traj.len(), "t_final": traj.times.last(), "energy_drift": drift }),
    )?;
    Ok(Outcome::new(EXIT_OK).kv("samples", traj.len()).kv("energy_drift", format!("{drift:.3e}")))
}

#[derive(Serialize)]
struct CheckRow {
    group: String,
    check: String,
    value: f64,
    tolerance: f64,
    pass: bool,
}

fn rows_csv(rows: &[CheckRow]) -> String {
    let mut s = String::from("group,check,value,tolerance,pass\n");
    for r in rows {
        s.push_str(&format!("{},\"{}\",{:.6e},{:.6e},{}\n", r.group, r.check, r.value, r.tolerance, r.pass));
    }
    s
}

pub fn verify(ctx: &Context, out: &OutputDir, suite: Suite) -> Result<Outcome> {
    let cfg = ctx.config.verify.clone().unwrap_or_default();
    let VerifySection { n_max, n_cut, .. } = cfg;
    let mut rows = Vec::new();
    let mut report = serde_json::Map::new();
    report.insert("seed".into(), ctx.seed.into());
    if matches!(suite, Suite::Identities | Suite::All) {
        ctx.note("split identities");
        let split =
            split_identities_with(n_max, n_cut, &cfg.t_values, cfg.samples, rng::split(ctx.seed, 1), ctx.corruption)?;
        for c in &split.checks {
            rows.push(CheckRow { group: "split".into(), check: c.name.clone(), value: c.max_rel_err, tolerance: c.tol, pass: c.pass });
        }
        ctx.note("oracle equivalence");
        let eq = oracle_equivalence(n_max, cfg.equivalence_samples, rng::split(ctx.seed, 2))?;
        for c in &eq.checks {
            rows.push(CheckRow { group: "oracle".into(), check: c.name.clone(), value: c.max_rel_err, tolerance: c.tol, pass: c.pass });
        }
        ctx.note("negative controls");
        let controls = negative_controls(n_max, cfg.control_samples, rng::split(ctx.seed, 3))?;
        for c in &controls {
            rows.push(CheckRow {
                group: "control".into(),
                check: c.corruption.name().into(),
                value: c.failing_checks.len() as f64,
                tolerance: 2.0,
                pass: c.detected,
            });
        }
        report.insert("split".into(), serde_json::to_value(&split)?);
        report.insert("equivalence".into(), serde_json::to_value(&eq)?);
        report.insert("controls".into(), serde_json::to_value(&controls)?);
    }
    if matches!(suite, Suite::Residuals | Suite::All) {
        ctx.note("differentiation-by-parts residuals");
        let order = dbp_order(&cfg.residuals, cfg.residual_n_cut)?;
        for c in &order {
            rows.push(CheckRow { group: "residual".into(), check: c.form.clone(), value: c.ratio, tolerance: 0.5, pass: c.pass });
        }
        report.insert("residuals".into(), serde_json::to_value(&order)?);
    }
    out.write_json("verify.json", &report)?;
    out.write("verify.csv", &rows_csv(&rows))?;
    let failed = rows.iter().filter(|r| !r.pass).count();
    let exit = if failed == 0 { EXIT_OK } else { EXIT_VERIFY };
    Ok(Outcome::new(exit).kv("checks", rows.len()).kv("failed", failed))
}

pub fn contract(ctx: &Context, out: &OutputDir) -> Result<Outcome> {
    let mut sec = section(&ctx.config.contract, "contract")?;
    if ctx.seed_override {
        reseed(&mut sec.initial, ctx.seed);
    }
    let cfg = sec.solver.clone();
    cfg.validate()?;
    let p0 = sec.initial.build(cfg.n_max)?;
    ctx.note(&format!("solving {} on [0, {}]", cfg.which.name(), cfg.t_star));
    let outcome = solve_by_contraction(&p0, &cfg);
    let lip = match (&outcome, sec.lipschitz_samples) {
        (Ok(_), n) if n > 0 => Some(estimate_lipschitz(&p0, &cfg, n, rng::split(ctx.seed, 4))?),
        _ => None,
    };
    let report = SolverReport::new(&cfg, &outcome, lip);
    out.write_json("solver_report.json", &report)?;
    match outcome {
        Ok(sol) => {
            let mut o = Outcome::new(EXIT_OK).kv("iterations", sol.iterations);
            if sec.agreement {
                let a = agreement(&p0, &cfg, &sol)?;
                out.write_json("agreement.json", &a)?;
                o = o.kv("agreement", a.pass);
            }
            Ok(o)
        }
        Err(e) => {
            ctx.note(&e.to_string());
            Ok(Outcome::new(exit_code(&e)).kv("iterations", report.iterations).kv("escaped_ball", report.escaped_ball))
        }
    }
}

pub fn bounds(ctx: &Context, out: &OutputDir) -> Result<Outcome> {
    let sec = section(&ctx.config.bounds, "bounds")?;
    sec.validate()?;
    let mut estimates = Vec::new();
    for (i, req) in sec.estimates.iter().enumerate() {
        let op = OperatorId::parse(&req.op).ok_or_else(|| Error::Config(format!("unknown operator {}", req.op)))?;
        ctx.note(&format!("estimating {op} at s={}", req.s));
        let seed = rng::split(ctx.seed, i as u64);
        estimates.push(lemma_bound(op, SobolevIndex(req.s), &req.extra, &sec.n_values, sec.samples, seed)?);
    }
    out.write_json("bounds.json", &estimates)?;
    out.write("bounds.csv", &bounds_csv(&estimates))?;
    let count = |v: Verdict| estimates.iter().filter(|e| e.verdict == v).count();
    let exit = if count(Verdict::Fail) > 0 { EXIT_VERIFY } else { EXIT_OK };
    Ok(Outcome::new(exit)
        .kv("estimates", estimates.len())
        .kv("fail", count(Verdict::Fail))
        .kv("inconclusive", count(Verdict::Inconclusive)))
}

pub fn converge(ctx: &Context, out: &OutputDir) -> Result<Outcome> {
    let mut sec = section(&ctx.config.converge, "converge")?;
    if ctx.seed_override {
        reseed(&mut sec.base.initial, ctx.seed);
    }
    ctx.note(&format!("reference n_max={}", sec.base.n_max));
    let rep = convergence_study(&sec.base, &sec.n_list)?;
    out.write_json("convergence.json", &rep)?;
    let exit = if rep.strictly_decreasing { EXIT_OK } else { EXIT_VERIFY };
    Ok(Outcome::new(exit).kv("strictly_decreasing", rep.strictly_decreasing))
}
