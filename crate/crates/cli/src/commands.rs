use std::fs;

use chansim::bounds::{achievability_bound_copies, converse_bound_copies, sweep, BoundReport, SweepSpec};
use chansim::capacity::{capacity_ce, renyi_channel_mutual_info, CapacityResult};
use chansim::harness::{
    check_aep_trend, check_concavity_in_channel, check_input_convexity, check_restricted_minimax,
};
use chansim::optim::OptimizerConfig;
use chansim::quantum::{channel_from_json, matrix_to_json, DensityOperator, QuantumChannel};
use chansim::{Error, Result};
use serde_json::{json, Map, Value};

use crate::args::{ChannelArgs, SolverArgs};
use crate::report::{Cell, Report};

fn input(path: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Input {
        path: path.into(),
        message: message.into(),
    }
}

/// `None` when neither a file nor a builtin was given.
pub fn load_channel(a: &ChannelArgs) -> Result<Option<QuantumChannel>> {
    if let Some(path) = &a.channel {
        let shown = path.display().to_string();
        let text = fs::read_to_string(path).map_err(|e| input(&shown, e.to_string()))?;
        let v: Value = serde_json::from_str(&text).map_err(|e| input(&shown, e.to_string()))?;
        return channel_from_json(&v).map(Some);
    }
    let Some(name) = &a.builtin else {
        return Ok(None);
    };
    let mut obj = Map::new();
    obj.insert("builtin".into(), json!(name));
    obj.insert("d".into(), json!(a.d));
    if let Some(p) = a.p {
        obj.insert("p".into(), json!(p));
    }
    if let Some(d) = a.d_out {
        obj.insert("d_out".into(), json!(d));
    }
    if let Some(r) = a.rank {
        obj.insert("rank".into(), json!(r));
    }
    if let Some(s) = a.channel_seed {
        obj.insert("seed".into(), json!(s));
    }
    channel_from_json(&Value::Object(obj)).map(Some)
}

fn require(a: &ChannelArgs) -> Result<QuantumChannel> {
    load_channel(a)?.ok_or_else(|| input("channel", "give --channel FILE or --builtin NAME"))
}

fn optimizer(s: &SolverArgs, seed: u64) -> Result<OptimizerConfig> {
    let cfg = OptimizerConfig {
        restarts: s.restarts,
        max_iter: s.max_iter,
        step_tol: s.step_tol,
        value_tol: s.value_tol,
        seed,
    };
    cfg.validate()?;
    Ok(cfg)
}

fn unit_interval(xs: &[f64], name: &str) -> Result<()> {
    match xs.iter().find(|&&x| !(x > 0.0 && x < 1.0)) {
        Some(x) => Err(Error::Parameter(format!("{name} = {x} is outside (0, 1)"))),
        None => Ok(()),
    }
}

fn copies(ns: &[usize]) -> Result<()> {
    match ns.iter().find(|&&n| n == 0) {
        Some(_) => Err(Error::Parameter("n must be at least 1".into())),
        None => Ok(()),
    }
}

fn state_json(r: &DensityOperator) -> Value {
    matrix_to_json(r.matrix())
}

fn bound_json(b: &BoundReport) -> Value {
    json!({
        "witness_rho": state_json(&b.witness_rho),
        "witness_sigma": state_json(&b.witness_sigma),
        "converged": b.converged,
        "evaluations": b.evaluations,
    })
}

pub fn bounds(
    ch: &ChannelArgs,
    eps: &[f64],
    delta: &[f64],
    ns: &[usize],
    solver: &SolverArgs,
    seed: u64,
) -> Result<Report> {
    let n = require(ch)?;
    let cfg = optimizer(solver, seed)?;
    unit_interval(eps, "eps")?;
    unit_interval(delta, "delta")?;
    copies(ns)?;
    if let Some(d) = delta.iter().find(|&&d| eps.iter().all(|&e| d >= e)) {
        return Err(Error::Parameter(format!("delta = {d} is not below any eps")));
    }
    let mut rep = Report::new(vec![
        "n",
        "epsilon",
        "delta",
        "converse bits, sup (best found)",
        "achievability bits",
        "converged",
    ]);
    for &k in ns {
        for &e in eps {
            let conv = converse_bound_copies(&n, e, k, &cfg)?;
            let c_bits = conv.converse_bits.expect("converse report");
            let pairs: Vec<f64> = delta.iter().copied().filter(|&d| d < e).collect();
            if pairs.is_empty() {
                rep.rows.push(vec![k.into(), e.into(), Cell::Empty, c_bits.into(), Cell::Empty, conv.converged.into()]);
                rep.results.push(json!({
                    "n": k, "epsilon": e, "delta": null,
                    "converse_bits": c_bits, "achievability_bits": null,
                    "converse": bound_json(&conv),
                }));
            }
            for d in pairs {
                let ach = achievability_bound_copies(&n, e, d, k, &cfg)?;
                let a_bits = ach.achievability_bits.expect("achievability report");
                let converged = conv.converged && ach.converged;
                rep.rows.push(vec![k.into(), e.into(), d.into(), c_bits.into(), a_bits.into(), converged.into()]);
                rep.results.push(json!({
                    "n": k, "epsilon": e, "delta": d,
                    "converse_bits": c_bits, "achievability_bits": a_bits,
                    "converse": bound_json(&conv),
                    "achievability": bound_json(&ach),
                }));
            }
        }
    }
    rep.notes.push("sup over inputs: best value found by the search; bits for n channel uses".into());
    Ok(rep)
}

fn capacity_json(name: &str, alpha: Option<f64>, r: &CapacityResult) -> Value {
    json!({
        "quantity": name,
        "alpha": alpha,
        "value_bits": r.value,
        "converged": r.converged,
        "iterations": r.iterations,
        "optimizer_state": state_json(&r.optimizer_state),
        "inner_witness": state_json(&r.inner_witness),
    })
}

pub fn capacity(ch: &ChannelArgs, alphas: &[f64], solver: &SolverArgs, seed: u64) -> Result<Report> {
    let n = require(ch)?;
    let cfg = optimizer(solver, seed)?;
    if let Some(a) = alphas.iter().find(|&&a| !(a > 1.0 && a.is_finite())) {
        return Err(Error::Parameter(format!("alpha = {a} must be a finite value above 1")));
    }
    let mut rep = Report::new(vec!["quantity", "alpha", "value_bits", "converged", "iterations"]);
    let ce = capacity_ce(&n, &cfg)?;
    rep.rows.push(vec!["C_E".into(), Cell::Empty, ce.value.into(), ce.converged.into(), ce.iterations.into()]);
    rep.results.push(capacity_json("capacity", None, &ce));
    for &a in alphas {
        let r = renyi_channel_mutual_info(&n, a, &cfg)?;
        rep.rows.push(vec!["renyi".into(), a.into(), r.value.into(), r.converged.into(), r.iterations.into()]);
        rep.results.push(capacity_json("renyi", Some(a), &r));
    }
    Ok(rep)
}

pub struct VerifyOpts {
    pub trials: usize,
    pub hull: usize,
    pub aep_copies: usize,
    pub eps: f64,
}

/// Returns the report and whether every property passed.
pub fn verify(ch: &ChannelArgs, o: &VerifyOpts, solver: &SolverArgs, seed: u64) -> Result<(Report, bool)> {
    let n = match load_channel(ch)? {
        Some(n) => n,
        None => chansim::quantum::dephasing(2, 0.5)?,
    };
    let cfg = optimizer(solver, seed)?;
    if o.trials == 0 {
        return Err(Error::Parameter("trials must be at least 1".into()));
    }
    let mut reports = vec![
        check_input_convexity(&n, o.trials, seed)?,
        check_concavity_in_channel(&n, o.trials, seed.wrapping_add(1))?,
        check_restricted_minimax(&n, o.hull, &cfg, seed.wrapping_add(2))?,
    ];
    if o.aep_copies > 0 {
        let rho = DensityOperator::maximally_mixed(n.d_in());
        reports.push(check_aep_trend(&n, &rho, o.eps, o.aep_copies)?);
    }
    let mut rep = Report::new(vec!["property", "trials", "worst_violation", "pass"]);
    for r in &reports {
        rep.rows.push(vec![r.name.clone().into(), r.trials.into(), r.worst_violation.into(), r.pass.into()]);
        rep.results.push(serde_json::to_value(r).expect("report serializes"));
    }
    Ok((rep, reports.iter().all(|r| r.pass)))
}

pub struct SweepOpts<'a> {
    pub eps: &'a [f64],
    pub delta: &'a [f64],
    pub n: &'a [usize],
    pub alpha: &'a [f64],
}

pub fn sweep_cmd(ch: &ChannelArgs, o: &SweepOpts, solver: &SolverArgs, seed: u64) -> Result<Report> {
    let n = require(ch)?;
    let cfg = optimizer(solver, seed)?;
    let spec = SweepSpec {
        epsilons: o.eps.to_vec(),
        deltas: o.delta.to_vec(),
        copies: o.n.to_vec(),
        alphas: o.alpha.to_vec(),
    };
    let rows = sweep(&n, &spec, &cfg)?;
    let mut rep = Report::new(vec![
        "kind", "epsilon", "delta", "n", "alpha", "value_bits", "converged", "wall_ms", "check",
    ]);
    rep.csv_width = 8;
    for r in &rows {
        let check = match r.check {
            Some(true) => "pass",
            Some(false) => "FAIL",
            None => "",
        };
        rep.rows.push(vec![
            r.kind.as_str().into(),
            r.epsilon.into(),
            r.delta.into(),
            r.n.into(),
            r.alpha.into(),
            r.value_bits.into(),
            r.converged.into(),
            r.wall_ms.to_string().into(),
            check.into(),
        ]);
        rep.results.push(serde_json::to_value(r).expect("row serializes"));
        if let Some(e) = &r.error {
            rep.notes.push(format!("{} ε={:?} δ={:?} n={}: {e}", r.kind.as_str(), r.epsilon, r.delta, r.n));
        }
    }
    Ok(rep)
}
