use super::{LEAKAGE_TOL, SUPPORT_TOL};
use crate::error::{Error, Result};
use crate::linalg::{herm_eig, hs_inner, pseudo_log2, pseudo_power, CMatrix, HermitianEig};
use crate::quantum::DensityOperator;

/// Whether `ρ` lives inside the support of `σ`.
fn inside_support(rho: &CMatrix, sigma: &HermitianEig) -> bool {
    let kernel = sigma.reconstruct_with(|l| if l > SUPPORT_TOL { 0.0 } else { 1.0 });
    let leak = herm_eig(&(&kernel * rho * &kernel))
        .map(|e| e.max_eigenvalue())
        .unwrap_or(f64::INFINITY);
    leak <= LEAKAGE_TOL
}

fn check_dims(rho: &DensityOperator, sigma: &DensityOperator) -> Result<()> {
    if rho.dim() != sigma.dim() {
        return Err(Error::dim(format!(
            "divergence between dimensions {} and {}",
            rho.dim(),
            sigma.dim()
        )));
    }
    Ok(())
}

/// `log₂ λ_max(σ^{-1/2} ρ σ^{-1/2})` on the support of `σ`.
pub fn dmax(rho: &DensityOperator, sigma: &DensityOperator) -> Result<f64> {
    check_dims(rho, sigma)?;
    dmax_matrices(rho.matrix(), sigma.matrix())
}

pub(crate) fn dmax_matrices(rho: &CMatrix, sigma: &CMatrix) -> Result<f64> {
    let se = herm_eig(sigma)?;
    if !inside_support(rho, &se) {
        return Ok(f64::INFINITY);
    }
    let s = pseudo_power(&se, -0.5, SUPPORT_TOL);
    let lam = herm_eig(&(&s * rho * &s))?.max_eigenvalue();
    Ok(lam.log2())
}

/// `S(ρ) = −tr ρ log₂ ρ` with `0 log 0 = 0`.
pub fn von_neumann_entropy(rho: &CMatrix) -> Result<f64> {
    let e = herm_eig(rho)?;
    Ok(e.eigenvalues
        .iter()
        .filter(|&&l| l > 1e-14)
        .map(|&l| -l * l.log2())
        .sum())
}

/// Umegaki relative entropy `tr ρ (log₂ ρ − log₂ σ)`.
pub fn relative_entropy(rho: &DensityOperator, sigma: &DensityOperator) -> Result<f64> {
    check_dims(rho, sigma)?;
    let se = herm_eig(sigma.matrix())?;
    if !inside_support(rho.matrix(), &se) {
        return Ok(f64::INFINITY);
    }
    let log_sigma = pseudo_log2(&se, SUPPORT_TOL);
    let neg_s = -von_neumann_entropy(rho.matrix())?;
    Ok(neg_s - hs_inner(rho.matrix(), &log_sigma))
}

/// Sandwiched Rényi divergence
/// `1/(α−1) log₂ tr[(σ^{(1−α)/2α} ρ σ^{(1−α)/2α})^α]` for `α > 1`.
/// Orders within `1e-4` of 1 are evaluated as the relative entropy.
pub fn sandwiched_renyi(rho: &DensityOperator, sigma: &DensityOperator, alpha: f64) -> Result<f64> {
    if !(alpha > 1.0) || !alpha.is_finite() {
        return Err(Error::param(format!("Rényi order {alpha} must exceed 1")));
    }
    check_dims(rho, sigma)?;
    if alpha < 1.0 + 1e-4 {
        return relative_entropy(rho, sigma);
    }
    let se = herm_eig(sigma.matrix())?;
    if !inside_support(rho.matrix(), &se) {
        return Ok(f64::INFINITY);
    }
    let s = pseudo_power(&se, (1.0 - alpha) / (2.0 * alpha), SUPPORT_TOL);
    let q = renyi_trace(&(&s * rho.matrix() * &s), alpha)?;
    Ok(q.log2() / (alpha - 1.0))
}

/// `tr X^α` for PSD `X`.
pub(crate) fn renyi_trace(x: &CMatrix, alpha: f64) -> Result<f64> {
    Ok(herm_eig(x)?
        .eigenvalues
        .iter()
        .map(|&l| if l > 0.0 { l.powf(alpha) } else { 0.0 })
        .sum())
}
