use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::capacity::{capacity_ce, renyi_channel_mutual_info};
use crate::divergences::{smoothed_imax, SmoothingSpec};
use crate::error::{Error, Result};
use crate::optim::{
    density_from_factor, factor_from_density, nelder_mead, random_factor, OptimizerConfig,
};
use crate::quantum::{joint_output, DensityOperator, QuantumChannel};

/// Largest joint `A'ⁿBⁿ` dimension fed to the smoothing SDP inside a search.
pub const SEARCH_MAX_JOINT_DIM: usize = 64;
/// Slack of the chain and ordering checks in sweeps.
pub const CHAIN_TOL: f64 = 1e-4;
const ORDER_TOL: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct BoundReport {
    pub epsilon: f64,
    pub delta: Option<f64>,
    /// Bits for `n_copies` uses; set by [`achievability_bound`].
    pub achievability_bits: Option<f64>,
    /// Bits for `n_copies` uses; set by [`converse_bound`].
    pub converse_bits: Option<f64>,
    /// Best single-copy input found; the search input is its `n`-fold power.
    pub witness_rho: DensityOperator,
    pub witness_sigma: DensityOperator,
    pub n_copies: usize,
    pub converged: bool,
    pub evaluations: usize,
}

struct Best {
    value: f64,
    rho: DensityOperator,
    sigma: DensityOperator,
}

struct Search {
    best: Best,
    converged: bool,
    evaluations: usize,
}

fn check_epsilon(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::param(format!("ε = {eps} outside (0,1)")));
    }
    Ok(())
}

/// Best-found `sup_ρ I_max^ε(A'ⁿ:Bⁿ)` over i.i.d. inputs `ρ^{⊗n}` of
/// `N^{⊗n}`. Every evaluated input certifies its value, so the result is a
/// lower bound on the supremum. Inputs where the SDP fails are skipped.
fn sup_smoothed(
    n: &QuantumChannel,
    copies: usize,
    smoothing: f64,
    cfg: &OptimizerConfig,
) -> Result<Search> {
    cfg.validate()?;
    if copies == 0 {
        return Err(Error::param("at least one channel use is required"));
    }
    let d = n.d_in();
    let joint_dim = (d * n.d_out()).checked_pow(copies as u32).unwrap_or(usize::MAX);
    if joint_dim > SEARCH_MAX_JOINT_DIM {
        return Err(Error::Resource(format!(
            "joint dimension {joint_dim} exceeds the search cap of {SEARCH_MAX_JOINT_DIM}"
        )));
    }
    let spec = SmoothingSpec::new(smoothing)?;
    let chan = n.tensor_power(copies);
    let (d_a, d_b) = (chan.d_in(), chan.d_out());

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut starts = vec![factor_from_density(&DensityOperator::maximally_mixed(d))];
    for _ in 1..cfg.restarts {
        starts.push(random_factor(&mut rng, d));
    }
    let runs: Vec<(Option<Best>, bool, usize)> = starts
        .into_par_iter()
        .map(|x0| {
            let mut best: Option<Best> = None;
            let mut f = |x: &[f64]| -> f64 {
                let attempt = density_from_factor(x, d).and_then(|rho| {
                    let joint = joint_output(&chan, &rho.tensor_power(copies))?;
                    let s = smoothed_imax(&joint, d_a, d_b, &spec)?;
                    Ok((rho, s))
                });
                match attempt {
                    Ok((rho, s)) => {
                        if best.as_ref().is_none_or(|b| s.value > b.value) {
                            best = Some(Best {
                                value: s.value,
                                rho,
                                sigma: s.sigma,
                            });
                        }
                        -s.value
                    }
                    Err(e) => {
                        log::warn!("skipping input in smoothed search: {e}");
                        f64::INFINITY
                    }
                }
            };
            let m = nelder_mead(&mut f, &x0, 0.1, cfg);
            (best, m.converged, m.evaluations)
        })
        .collect();

    let evaluations = runs.iter().map(|r| r.2).sum();
    let mut chosen: Option<(Best, bool)> = None;
    for (best, conv, _) in runs {
        if let Some(b) = best {
            if chosen.as_ref().is_none_or(|(c, _)| b.value > c.value) {
                chosen = Some((b, conv));
            }
        }
    }
    match chosen {
        Some((best, converged)) if best.value.is_finite() => Ok(Search {
            best,
            converged,
            evaluations,
        }),
        _ => Err(Error::Evaluation(
            "the smoothing SDP failed at every evaluated input".into(),
        )),
    }
}

/// Converse `sup_ρ inf_σ D_max^{ε,A'}(ρ_A'B ‖ ρ_A' ⊗ σ_B)` with the
/// supremum reported as the best value found.
pub fn converse_bound(n: &QuantumChannel, eps: f64, cfg: &OptimizerConfig) -> Result<BoundReport> {
    converse_bound_copies(n, eps, 1, cfg)
}

/// [`converse_bound`] for `N^{⊗n}`, searching over i.i.d. inputs.
pub fn converse_bound_copies(
    n: &QuantumChannel,
    eps: f64,
    copies: usize,
    cfg: &OptimizerConfig,
) -> Result<BoundReport> {
    check_epsilon(eps)?;
    let s = sup_smoothed(n, copies, eps, cfg)?;
    Ok(BoundReport {
        epsilon: eps,
        delta: None,
        achievability_bits: None,
        converse_bits: Some(s.best.value.max(0.0)),
        witness_rho: s.best.rho,
        witness_sigma: s.best.sigma,
        n_copies: copies,
        converged: s.converged,
        evaluations: s.evaluations,
    })
}

/// Achievability: the smoothed supremum at `ε − δ` plus `2 log₂(1/δ)`.
pub fn achievability_bound(
    n: &QuantumChannel,
    eps: f64,
    delta: f64,
    cfg: &OptimizerConfig,
) -> Result<BoundReport> {
    achievability_bound_copies(n, eps, delta, 1, cfg)
}

pub fn achievability_bound_copies(
    n: &QuantumChannel,
    eps: f64,
    delta: f64,
    copies: usize,
    cfg: &OptimizerConfig,
) -> Result<BoundReport> {
    check_epsilon(eps)?;
    if !(delta > 0.0 && delta < eps) {
        return Err(Error::param(format!("δ = {delta} must lie in (0, ε = {eps})")));
    }
    let s = sup_smoothed(n, copies, eps - delta, cfg)?;
    Ok(BoundReport {
        epsilon: eps,
        delta: Some(delta),
        achievability_bits: Some(s.best.value.max(0.0) + 2.0 * (1.0 / delta).log2()),
        converse_bits: None,
        witness_rho: s.best.rho,
        witness_sigma: s.best.sigma,
        n_copies: copies,
        converged: s.converged,
        evaluations: s.evaluations,
    })
}

/// `(1/n)[−log₂(1−√(1−ε²/16))/(α−1) + log₂((128+ε²)/ε²) + log₂(16/ε²)]`.
pub fn asymptotic_fudge(copies: usize, eps: f64, alpha: f64) -> Result<f64> {
    check_epsilon(eps)?;
    if copies == 0 {
        return Err(Error::param("n must be positive"));
    }
    if !(alpha > 1.0) || !alpha.is_finite() {
        return Err(Error::param(format!("Rényi order {alpha} must exceed 1")));
    }
    let e2 = eps * eps;
    // 1 − √(1−x) = x / (1 + √(1−x)) without cancellation.
    let x = e2 / 16.0;
    let gap = x / (1.0 + (1.0 - x).sqrt());
    let bracket = -gap.log2() / (alpha - 1.0) + ((128.0 + e2) / e2).log2() + (16.0 / e2).log2();
    Ok(bracket / copies as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowKind {
    Converse,
    Achievability,
    RenyiUpper,
    Fudge,
    Capacity,
}

impl RowKind {
    pub fn as_str(self) -> &'static str {
        match self {
            RowKind::Converse => "converse",
            RowKind::Achievability => "achievability",
            RowKind::RenyiUpper => "renyi_upper",
            RowKind::Fudge => "fudge",
            RowKind::Capacity => "capacity",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub epsilons: Vec<f64>,
    pub deltas: Vec<f64>,
    pub copies: Vec<usize>,
    pub alphas: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub kind: RowKind,
    pub epsilon: Option<f64>,
    pub delta: Option<f64>,
    pub n: usize,
    pub alpha: Option<f64>,
    /// Per channel use; `NaN` when `error` is set.
    pub value_bits: f64,
    pub converged: bool,
    #[serde(skip)]
    pub wall_ms: u64,
    pub error: Option<String>,
    /// Achievability rows: not below the converse rate (within `1e-6`).
    /// Rényi upper rows: not below any achievability rate at the same `ε` and
    /// `n` (within [`CHAIN_TOL`]).
    pub check: Option<bool>,
}

#[derive(Debug, Clone, Copy)]
enum Job {
    Capacity,
    Renyi(usize),
    Converse(usize, usize),
    Achievability(usize, usize, usize),
}

struct Outcome {
    value: Result<f64>,
    converged: bool,
    wall_ms: u64,
}

fn run_job(n: &QuantumChannel, spec: &SweepSpec, cfg: &OptimizerConfig, job: Job) -> Outcome {
    let start = Instant::now();
    let (value, converged) = match job {
        Job::Capacity => match capacity_ce(n, cfg) {
            Ok(r) => (Ok(r.value), r.converged),
            Err(e) => (Err(e), false),
        },
        Job::Renyi(a) => match renyi_channel_mutual_info(n, spec.alphas[a], cfg) {
            Ok(r) => (Ok(r.value), r.converged),
            Err(e) => (Err(e), false),
        },
        Job::Converse(e, k) => {
            let copies = spec.copies[k];
            match converse_bound_copies(n, spec.epsilons[e], copies, cfg) {
                Ok(r) => (Ok(r.converse_bits.unwrap_or(f64::NAN) / copies as f64), r.converged),
                Err(err) => (Err(err), false),
            }
        }
        Job::Achievability(e, dl, k) => {
            let copies = spec.copies[k];
            match achievability_bound_copies(n, spec.epsilons[e], spec.deltas[dl], copies, cfg) {
                Ok(r) => (
                    Ok(r.achievability_bits.unwrap_or(f64::NAN) / copies as f64),
                    r.converged,
                ),
                Err(err) => (Err(err), false),
            }
        }
    };
    Outcome {
        value,
        converged,
        wall_ms: start.elapsed().as_millis() as u64,
    }
}

fn row(kind: RowKind, n: usize, out: &Outcome) -> SweepRow {
    let (value_bits, error) = match &out.value {
        Ok(v) => (*v, None),
        Err(e) => (f64::NAN, Some(e.to_string())),
    };
    SweepRow {
        kind,
        epsilon: None,
        delta: None,
        n,
        alpha: None,
        value_bits,
        converged: out.converged,
        wall_ms: out.wall_ms,
        error,
        check: None,
    }
}

/// Bound table for `N`: capacity, converse and achievability rates per
/// `(ε, δ, n)`, and the Rényi upper rate `Ĩ_α(N) + fudge(n)` (using
/// additivity) with the correction itself. Per-row failures are recorded in
/// the row. Rows come back in a fixed order whatever the scheduling.
pub fn sweep(n: &QuantumChannel, spec: &SweepSpec, cfg: &OptimizerConfig) -> Result<Vec<SweepRow>> {
    if spec.epsilons.is_empty() || spec.deltas.is_empty() || spec.copies.is_empty() || spec.alphas.is_empty() {
        return Err(Error::param("sweep lists must be nonempty"));
    }
    cfg.validate()?;
    let mut jobs = vec![Job::Capacity];
    jobs.extend((0..spec.alphas.len()).map(Job::Renyi));
    for k in 0..spec.copies.len() {
        for e in 0..spec.epsilons.len() {
            jobs.push(Job::Converse(e, k));
            for dl in 0..spec.deltas.len() {
                jobs.push(Job::Achievability(e, dl, k));
            }
        }
    }
    let outcomes: Vec<Outcome> = jobs.par_iter().map(|&j| run_job(n, spec, cfg, j)).collect();

    let mut rows = vec![row(RowKind::Capacity, 1, &outcomes[0])];
    let renyi = &outcomes[1..=spec.alphas.len()];
    let mut idx = 1 + spec.alphas.len();
    for &copies in &spec.copies {
        for &eps in &spec.epsilons {
            let mut conv = row(RowKind::Converse, copies, &outcomes[idx]);
            conv.epsilon = Some(eps);
            idx += 1;
            let conv_rate = conv.value_bits;
            rows.push(conv);
            let mut ach_rates = Vec::new();
            for &delta in &spec.deltas {
                let mut r = row(RowKind::Achievability, copies, &outcomes[idx]);
                idx += 1;
                r.epsilon = Some(eps);
                r.delta = Some(delta);
                if r.error.is_none() {
                    ach_rates.push(r.value_bits);
                    if conv_rate.is_finite() {
                        r.check = Some(r.value_bits >= conv_rate - ORDER_TOL);
                    }
                }
                rows.push(r);
            }
            for (a, &alpha) in spec.alphas.iter().enumerate() {
                let fudge = asymptotic_fudge(copies, eps, alpha);
                let mut up = row(RowKind::RenyiUpper, copies, &renyi[a]);
                up.epsilon = Some(eps);
                up.alpha = Some(alpha);
                match (&renyi[a].value, &fudge) {
                    (Ok(i), Ok(f)) => {
                        up.value_bits = i + f;
                        if !ach_rates.is_empty() {
                            up.check = Some(ach_rates.iter().all(|&r| r <= up.value_bits + CHAIN_TOL));
                        }
                    }
                    (_, Err(e)) => {
                        up.value_bits = f64::NAN;
                        up.error = Some(e.to_string());
                    }
                    _ => {}
                }
                rows.push(up);
                let fudge_out = Outcome {
                    converged: fudge.is_ok(),
                    value: fudge,
                    wall_ms: 0,
                };
                let mut fr = row(RowKind::Fudge, copies, &fudge_out);
                fr.epsilon = Some(eps);
                fr.alpha = Some(alpha);
                rows.push(fr);
            }
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fudge_scaling_is_exact() {
        let one = asymptotic_fudge(1, 0.4, 2.0).unwrap();
        for n in [1usize, 10, 100, 12345] {
            assert_eq!(asymptotic_fudge(n, 0.4, 2.0).unwrap(), one / n as f64);
        }
        assert!(asymptotic_fudge(1_000_000, 0.4, 2.0).unwrap() < 1e-4);
        assert!(asymptotic_fudge(0, 0.4, 2.0).is_err());
        assert!(asymptotic_fudge(1, 1.0, 2.0).is_err());
        assert!(asymptotic_fudge(1, 0.4, 1.0).is_err());
    }
}
