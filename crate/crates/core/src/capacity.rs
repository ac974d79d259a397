use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::divergences::von_neumann_entropy;
use crate::error::{Error, Result};
use crate::linalg::{
    herm_eig, hermitian_part, hs_inner, identity, kron, partial_trace, pseudo_log2, pseudo_power,
    real, trace, CMatrix, HermitianEig, DEFAULT_MAX_DIM,
};
use crate::optim::{
    density_from_factor, factor_from_density, nelder_mead, random_factor, OptimizerConfig,
};
use crate::quantum::{joint_output, random_density_with, DensityOperator, QuantumChannel};

/// Eigenvalues at or below this are left out of logarithms.
const LOG_TOL: f64 = 1e-14;
/// Sufficient-increase constant of the backtracking searches.
const ARMIJO: f64 = 1e-4;

#[derive(Debug, Clone)]
pub struct CapacityResult {
    /// Bits.
    pub value: f64,
    /// The maximizing channel input `ρ_A'`.
    pub optimizer_state: DensityOperator,
    /// The minimizing `σ_B` at `ρ_A'`.
    pub inner_witness: DensityOperator,
    pub iterations: usize,
    pub converged: bool,
}

/// `I(A':B) = S(A') + S(B) − S(A'B)` of the joint output on `ρ`.
pub fn mutual_info(n: &QuantumChannel, rho: &DensityOperator) -> Result<f64> {
    let joint = joint_output(n, rho)?;
    let dims = [n.d_in(), n.d_out()];
    let rho_b = partial_trace(joint.matrix(), &dims, &[1])?;
    Ok(von_neumann_entropy(rho.matrix())? + von_neumann_entropy(&rho_b)?
        - von_neumann_entropy(joint.matrix())?)
}

/// Mutual information as a function of the channel input `τ = ρᵀ`, with the
/// joint entropy taken from the complementary output.
fn mi_of_input(n: &QuantumChannel, tau: &CMatrix) -> Result<f64> {
    Ok(von_neumann_entropy(tau)? + von_neumann_entropy(&n.apply(tau))?
        - von_neumann_entropy(&n.apply_complementary(tau))?)
}

/// Gradient of [`mi_of_input`] up to multiples of the identity.
fn mi_gradient(n: &QuantumChannel, tau: &HermitianEig, tau_m: &CMatrix) -> Result<CMatrix> {
    let log_b = pseudo_log2(&herm_eig(&n.apply(tau_m))?, LOG_TOL);
    let log_e = pseudo_log2(&herm_eig(&n.apply_complementary(tau_m))?, LOG_TOL);
    let g = -pseudo_log2(tau, LOG_TOL) - n.apply_adjoint(&log_b)
        + n.apply_complementary_adjoint(&log_e);
    Ok(hermitian_part(&g))
}

/// `exp(ln τ + t G)` normalized; `τ` must be full rank.
fn mirror_step(tau: &HermitianEig, g: &CMatrix, t: f64) -> Result<CMatrix> {
    let log_tau = tau.reconstruct_with(|l| l.max(1e-300).ln());
    let h = herm_eig(&hermitian_part(&(log_tau + g * real(t))))?;
    let top = h.max_eigenvalue();
    let m = h.reconstruct_with(|l| (l - top).exp());
    let tr = trace(&m).re;
    Ok(m / real(tr))
}

/// Frank–Wolfe gap `λ_max(G) − ⟨G, τ⟩`, an upper bound on the distance to the
/// maximum of a concave function with gradient `G` at `τ`.
fn ascent_gap(g: &CMatrix, tau: &CMatrix) -> Result<f64> {
    Ok(herm_eig(g)?.max_eigenvalue() - hs_inner(g, tau))
}

struct Ascent {
    tau: CMatrix,
    value: f64,
    iterations: usize,
    converged: bool,
}

fn mirror_ascent(n: &QuantumChannel, start: CMatrix, cfg: &OptimizerConfig) -> Result<Ascent> {
    let mut tau = start;
    let mut value = mi_of_input(n, &tau)?;
    let mut t = 1.0;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < cfg.max_iter {
        iterations += 1;
        let eig = herm_eig(&tau)?;
        let g = mi_gradient(n, &eig, &tau)?;
        if ascent_gap(&g, &tau)? <= cfg.value_tol {
            converged = true;
            break;
        }
        let mut accepted = None;
        while t > 1e-14 {
            let cand = mirror_step(&eig, &g, t)?;
            let v = mi_of_input(n, &cand)?;
            if v >= value + ARMIJO * hs_inner(&g, &(&cand - &tau)) {
                accepted = Some((cand, v));
                break;
            }
            t *= 0.5;
        }
        let Some((cand, v)) = accepted else {
            break;
        };
        let gain = v - value;
        tau = cand;
        value = v;
        t *= 2.0;
        if gain < cfg.value_tol {
            converged = true;
            break;
        }
    }
    Ok(Ascent {
        tau,
        value,
        iterations,
        converged,
    })
}

fn starting_inputs(d: usize, cfg: &OptimizerConfig) -> Result<Vec<CMatrix>> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut starts = vec![DensityOperator::maximally_mixed(d).into_matrix()];
    for _ in 1..cfg.restarts {
        starts.push(random_density_with(&mut rng, d, d)?.into_matrix());
    }
    Ok(starts)
}

/// Index of the largest value, ties to the lowest index.
fn best_index(values: impl Iterator<Item = f64>) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, v) in values.enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    best.0
}

/// Entanglement-assisted capacity `sup_ρ I(A':B)` by mirror ascent from
/// the maximally mixed input and `restarts − 1` random inputs.
pub fn capacity_ce(n: &QuantumChannel, cfg: &OptimizerConfig) -> Result<CapacityResult> {
    cfg.validate()?;
    let runs: Vec<Ascent> = starting_inputs(n.d_in(), cfg)?
        .into_par_iter()
        .map(|s| mirror_ascent(n, s, cfg))
        .collect::<Result<_>>()?;
    let i = best_index(runs.iter().map(|r| r.value));
    let best = &runs[i];
    let tau = DensityOperator::from_approximate(&best.tau)?;
    Ok(CapacityResult {
        value: best.value,
        optimizer_state: tau.transpose(),
        inner_witness: DensityOperator::from_approximate(&n.apply(&best.tau))?,
        iterations: runs.iter().map(|r| r.iterations).sum(),
        converged: best.converged,
    })
}

/// `σ ↦ tr[(ρ^{1/2} (ρ_A^γ ⊗ σ^γ) ρ^{1/2})^α]`, `γ = (1−α)/α`, for a fixed
/// joint state. Its logarithm over `α − 1` is `D̃_α(ρ_AB ‖ ρ_A ⊗ σ_B)`.
struct RenyiObjective {
    sqrt_joint: CMatrix,
    marginal_power: CMatrix,
    d_a: usize,
    d_b: usize,
    alpha: f64,
    gamma: f64,
}

impl RenyiObjective {
    fn new(joint: &DensityOperator, d_a: usize, d_b: usize, alpha: f64) -> Result<Self> {
        let gamma = (1.0 - alpha) / alpha;
        let rho_a = partial_trace(joint.matrix(), &[d_a, d_b], &[0])?;
        Ok(Self {
            sqrt_joint: joint.sqrt(),
            marginal_power: pseudo_power(&herm_eig(&rho_a)?, gamma, 1e-12),
            d_a,
            d_b,
            alpha,
            gamma,
        })
    }

    fn sandwich(&self, sigma: &HermitianEig) -> CMatrix {
        let sp = pseudo_power(sigma, self.gamma, 1e-300);
        let mid = kron(&self.marginal_power, &sp);
        hermitian_part(&(&self.sqrt_joint * mid * &self.sqrt_joint))
    }

    fn log_q(&self, sigma: &HermitianEig) -> Result<f64> {
        let e = herm_eig(&self.sandwich(sigma))?;
        let q: f64 = e
            .eigenvalues
            .iter()
            .map(|&l| if l > 0.0 { l.powf(self.alpha) } else { 0.0 })
            .sum();
        Ok(q.ln())
    }

    fn bits(&self, log_q: f64) -> f64 {
        log_q / ((self.alpha - 1.0) * std::f64::consts::LN_2)
    }

    /// `ln Q`, its gradient in `σ`, and `tr_A[Ξ (ρ_A^γ ⊗ I)]` with
    /// `Ξ = ρ^{1/2} M^{α−1} ρ^{1/2}`, the operator of the fixed-point map.
    fn with_gradient(&self, sigma: &HermitianEig) -> Result<(f64, CMatrix, CMatrix)> {
        let m = herm_eig(&self.sandwich(sigma))?;
        let q: f64 = m
            .eigenvalues
            .iter()
            .map(|&l| if l > 0.0 { l.powf(self.alpha) } else { 0.0 })
            .sum();
        let m_pow = m.reconstruct_with(|l| if l > 0.0 { l.powf(self.alpha - 1.0) } else { 0.0 });
        let xi = &self.sqrt_joint * m_pow * &self.sqrt_joint;
        let weighted = xi * kron(&self.marginal_power, &identity(self.d_b));
        let k = hermitian_part(&partial_trace(&weighted, &[self.d_a, self.d_b], &[1])?);
        // Chain rule through σ ↦ σ^γ: divided differences in σ's eigenbasis.
        let u = &sigma.eigenvectors;
        let mut kh = u.adjoint() * &k * u * real(self.alpha);
        let lam = &sigma.eigenvalues;
        for i in 0..self.d_b {
            for j in 0..self.d_b {
                let (a, b) = (lam[i], lam[j]);
                let dd = if (a - b).abs() > 1e-12 * a.max(b) {
                    (a.powf(self.gamma) - b.powf(self.gamma)) / (a - b)
                } else {
                    self.gamma * a.powf(self.gamma - 1.0)
                };
                kh[(i, j)] *= dd;
            }
        }
        let grad = hermitian_part(&(u * kh * u.adjoint())) / real(q);
        Ok((q.ln(), grad, k))
    }
}

struct InnerMin {
    bits: f64,
    sigma: CMatrix,
    iterations: usize,
    converged: bool,
}

/// `min_σ D̃_α(ρ_AB ‖ ρ_A ⊗ σ)`. Stationarity of the scale-free objective
/// `ln Q(ω) + (α−1) ln tr ω^{−α/(α−1)}` in `ω = σ^γ` reads `σ ∝ K^{α/(2α−1)}`
/// with `K = tr_A[Ξ (ρ_A^γ ⊗ I)]`; that map is iterated with damping toward
/// the current point whenever a full step fails to decrease `Q`. The
/// Frank–Wolfe gap of the convex `Q` certifies convergence; a simplex search
/// over a factor of `σ` takes over if the iteration stalls with a large gap.
fn renyi_inner(obj: &RenyiObjective, start: &CMatrix, cfg: &OptimizerConfig) -> Result<InnerMin> {
    let d = obj.d_b;
    let mix = DensityOperator::maximally_mixed(d).into_matrix();
    let mut sigma = start * real(1.0 - 1e-3) + &mix * real(1e-3);
    let mut eig = herm_eig(&sigma)?;
    let (mut lq, mut grad, mut k) = obj.with_gradient(&eig)?;
    let scale = (obj.alpha - 1.0) * std::f64::consts::LN_2;
    let power = obj.alpha / (2.0 * obj.alpha - 1.0);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < cfg.max_iter {
        iterations += 1;
        let gap = hs_inner(&grad, &sigma) - herm_eig(&grad)?.min_eigenvalue();
        if gap / scale <= cfg.value_tol {
            converged = true;
            break;
        }
        let target = herm_eig(&k)?.reconstruct_with(|l| l.max(0.0).powf(power));
        let target = &target / real(trace(&target).re) * real(1.0 - 1e-14) + &mix * real(1e-14);
        let mut theta = 1.0;
        let mut accepted = None;
        while theta > 1e-6 {
            let cand = hermitian_part(&(&sigma * real(1.0 - theta) + &target * real(theta)));
            let ce = herm_eig(&cand)?;
            if obj.log_q(&ce)? < lq {
                accepted = Some((cand, ce));
                break;
            }
            theta *= 0.5;
        }
        let Some((cand, ce)) = accepted else {
            // No representable decrease left. The gap is first order in the
            // distance to the minimizer while the excess value is second
            // order, so a small gap here means the value is at the floor.
            converged = gap / scale <= cfg.value_tol.sqrt();
            break;
        };
        sigma = cand;
        eig = ce;
        (lq, grad, k) = obj.with_gradient(&eig)?;
    }
    if converged {
        return Ok(InnerMin {
            bits: obj.bits(lq),
            sigma,
            iterations,
            converged,
        });
    }
    let state = DensityOperator::from_approximate(&sigma)?;
    let mut f = |x: &[f64]| -> f64 {
        density_from_factor(x, d)
            .and_then(|s| obj.log_q(&s.eig()))
            .unwrap_or(f64::INFINITY)
    };
    let m = nelder_mead(&mut f, &factor_from_density(&state), 0.05, cfg);
    iterations += m.evaluations;
    if m.value < lq {
        let s = density_from_factor(&m.x, d)?;
        Ok(InnerMin {
            bits: obj.bits(m.value),
            sigma: s.into_matrix(),
            iterations,
            converged: m.converged,
        })
    } else {
        Ok(InnerMin {
            bits: obj.bits(lq),
            sigma,
            iterations,
            converged: m.converged,
        })
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 1.0) || !alpha.is_finite() {
        return Err(Error::param(format!("Rényi order {alpha} must exceed 1")));
    }
    Ok(())
}

/// `inf_σ D̃_α(ρ_A'B ‖ ρ_A' ⊗ σ_B)` at a fixed input.
fn renyi_at(
    n: &QuantumChannel,
    rho: &DensityOperator,
    alpha: f64,
    cfg: &OptimizerConfig,
) -> Result<InnerMin> {
    let joint = joint_output(n, rho)?;
    let obj = RenyiObjective::new(&joint, n.d_in(), n.d_out(), alpha)?;
    let rho_b = partial_trace(joint.matrix(), &[n.d_in(), n.d_out()], &[1])?;
    renyi_inner(&obj, &rho_b, cfg)
}

/// Sandwiched Rényi mutual information of the channel,
/// `sup_ρ inf_σ D̃_α(ρ_A'B ‖ ρ_A' ⊗ σ_B)`: simplex search over a factor of
/// `ρ` from the maximally mixed input and `restarts − 1` random inputs.
pub fn renyi_channel_mutual_info(
    n: &QuantumChannel,
    alpha: f64,
    cfg: &OptimizerConfig,
) -> Result<CapacityResult> {
    check_alpha(alpha)?;
    cfg.validate()?;
    let d = n.d_in();
    if d * n.d_out() > DEFAULT_MAX_DIM {
        return Err(Error::Resource(format!(
            "joint dimension {} exceeds {DEFAULT_MAX_DIM}",
            d * n.d_out()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut starts = vec![factor_from_density(&DensityOperator::maximally_mixed(d))];
    for _ in 1..cfg.restarts {
        starts.push(random_factor(&mut rng, d));
    }
    let runs: Vec<_> = starts
        .into_par_iter()
        .map(|x0| {
            let mut f = |x: &[f64]| -> f64 {
                density_from_factor(x, d)
                    .and_then(|rho| renyi_at(n, &rho, alpha, cfg))
                    .map(|m| -m.bits)
                    .unwrap_or(f64::INFINITY)
            };
            nelder_mead(&mut f, &x0, 0.1, cfg)
        })
        .collect();
    let i = best_index(runs.iter().map(|r| -r.value));
    let rho = density_from_factor(&runs[i].x, d)?;
    let inner = renyi_at(n, &rho, alpha, cfg)?;
    Ok(CapacityResult {
        value: inner.bits,
        optimizer_state: rho,
        inner_witness: DensityOperator::from_approximate(&inner.sigma)?,
        iterations: runs.iter().map(|r| r.evaluations).sum::<usize>() + inner.iterations,
        converged: runs[i].converged && inner.converged,
    })
}

/// `Ĩ_α(N^{⊗n})` for `n ∈ {1, 2}`; the product input may not exceed
/// dimension 4.
pub fn renyi_mi_product(
    n: &QuantumChannel,
    alpha: f64,
    copies: usize,
    cfg: &OptimizerConfig,
) -> Result<f64> {
    check_alpha(alpha)?;
    match copies {
        1 => Ok(renyi_channel_mutual_info(n, alpha, cfg)?.value),
        2 => {
            let d = n.d_in() * n.d_in();
            if d > 4 {
                return Err(Error::Resource(format!(
                    "two-copy input dimension {d} exceeds the cap of 4"
                )));
            }
            Ok(renyi_channel_mutual_info(&n.tensor(n), alpha, cfg)?.value)
        }
        _ => Err(Error::param(format!("copies must be 1 or 2, got {copies}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{depolarizing, random_channel, random_density};

    #[test]
    fn complementary_form_matches_joint_entropy() {
        for seed in 0..5 {
            let n = random_channel(2, 3, 2, seed).unwrap();
            let rho = random_density(2, 2, seed + 10).unwrap();
            let direct = mutual_info(&n, &rho).unwrap();
            let via = mi_of_input(&n, &rho.transpose().into_matrix()).unwrap();
            assert!((direct - via).abs() < 1e-10);
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let n = random_channel(2, 2, 3, 4).unwrap();
        let tau = random_density(2, 2, 5).unwrap().into_matrix();
        let dir = hermitian_part(&random_density(2, 2, 6).unwrap().into_matrix()) - &tau;
        let g = mi_gradient(&n, &herm_eig(&tau).unwrap(), &tau).unwrap();
        let h = 1e-6;
        let fd = (mi_of_input(&n, &(&tau + &dir * real(h))).unwrap()
            - mi_of_input(&n, &(&tau - &dir * real(h))).unwrap())
            / (2.0 * h);
        assert!((fd - hs_inner(&g, &dir)).abs() < 1e-6);
    }

    #[test]
    fn renyi_gradient_matches_finite_differences() {
        let n = depolarizing(2, 0.3).unwrap();
        let rho = random_density(2, 2, 1).unwrap();
        let joint = joint_output(&n, &rho).unwrap();
        let obj = RenyiObjective::new(&joint, 2, 2, 1.7).unwrap();
        let sigma = random_density(2, 2, 2).unwrap().into_matrix();
        let dir = random_density(2, 2, 3).unwrap().into_matrix() - &sigma;
        let (_, g, _) = obj.with_gradient(&herm_eig(&sigma).unwrap()).unwrap();
        let h = 1e-6;
        let at = |s: &CMatrix| obj.log_q(&herm_eig(s).unwrap()).unwrap();
        let fd = (at(&(&sigma + &dir * real(h))) - at(&(&sigma - &dir * real(h)))) / (2.0 * h);
        assert!((fd - hs_inner(&g, &dir)).abs() < 1e-6, "{fd} {}", hs_inner(&g, &dir));
    }
}
