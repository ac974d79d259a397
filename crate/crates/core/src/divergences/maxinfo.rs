use serde::{Deserialize, Serialize};

use super::renyi::dmax_matrices;
use super::support_factor;
use crate::error::{Error, Result};
use crate::linalg::{
    herm_eig, identity, is_real, kron, partial_trace, real, CMatrix, C64, ONE,
};
use crate::quantum::DensityOperator;
use crate::sdp::{solve, Field, LinearEntry, SdpProblem, SdpSolution, SdpStatus, SdpTolerances};

/// Which marginal of the smoothed state is held fixed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Marginal {
    A,
    B,
}

/// Fidelity-ball smoothing: `F(ρ̃, ρ) ≥ 1 − ε²` with one marginal pinned.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothingSpec {
    pub epsilon: f64,
    pub marginal: Marginal,
}

impl SmoothingSpec {
    pub fn new(epsilon: f64) -> Result<Self> {
        Self::with_marginal(epsilon, Marginal::A)
    }

    pub fn with_marginal(epsilon: f64, marginal: Marginal) -> Result<Self> {
        if !(0.0..1.0).contains(&epsilon) {
            return Err(Error::param(format!("smoothing parameter {epsilon} outside [0,1)")));
        }
        Ok(Self { epsilon, marginal })
    }
}

#[derive(Debug, Clone)]
pub struct SmoothedDmax {
    /// Bits; `+∞` when no smoothed state fits under the given `σ_B`.
    pub value: f64,
    pub rho_tilde: DensityOperator,
    pub sigma: DensityOperator,
}

/// `ρ_AB` restricted to `supp(ρ_A) ⊗ B`, or to `supp(ρ_A) ⊗ supp(σ_B)`
/// when a rank-deficient reference `σ_B` is given.
struct Compressed {
    /// Isometry onto the kept subspace, `d_A d_B × r d_B'`.
    lift: CMatrix,
    /// Eigenvalues of `ρ_A` on its support (so the compressed marginal is
    /// diagonal).
    marginal: Vec<f64>,
    /// Compressed `ρ_AB`; its trace drops below one when `ρ_AB` leaks out of
    /// the kept subspace.
    rho: CMatrix,
    d_b: usize,
}

impl Compressed {
    fn new(rho_ab: &DensityOperator, d_a: usize, d_b: usize, b_basis: Option<&CMatrix>) -> Result<Self> {
        if d_a * d_b != rho_ab.dim() {
            return Err(Error::dim(format!(
                "bipartition {d_a}x{d_b} does not match dimension {}",
                rho_ab.dim()
            )));
        }
        let rho_a = partial_trace(rho_ab.matrix(), &[d_a, d_b], &[0])?;
        let eig = herm_eig(&rho_a)?;
        let keep: Vec<usize> = (0..d_a)
            .filter(|&j| eig.eigenvalues[j] > super::SUPPORT_TOL)
            .collect();
        let basis = eig.eigenvectors.select_columns(&keep);
        let marginal = keep.iter().map(|&j| eig.eigenvalues[j]).collect();
        let lift = match b_basis {
            Some(v) => kron(&basis, v),
            None => kron(&basis, &identity(d_b)),
        };
        let rho = crate::linalg::hermitian_part(&(lift.adjoint() * rho_ab.matrix() * &lift));
        Ok(Self {
            lift,
            marginal,
            rho,
            d_b: b_basis.map_or(d_b, |v| v.ncols()),
        })
    }

    fn r(&self) -> usize {
        self.marginal.len()
    }

    fn dim(&self) -> usize {
        self.r() * self.d_b
    }

    fn lift(&self, m: &CMatrix) -> CMatrix {
        &self.lift * m * self.lift.adjoint()
    }

    /// Adds `S_pq + extra_pq − (ρ_A' ⊗ M)_pq = rhs_pq` for every `p ≤ q`,
    /// where `M` is `X_B` (block `x`) or `t σ_B` (1×1 block `x`).
    #[allow(clippy::too_many_arguments)]
    fn add_operator_inequality(
        &self,
        p: &mut SdpProblem,
        s_block: usize,
        extra: Option<(usize, usize)>,
        x_block: usize,
        sigma: Option<&CMatrix>,
        rhs: Option<&CMatrix>,
    ) {
        let n = self.dim();
        let d_b = self.d_b;
        for i in 0..n {
            for j in i..n {
                let (a, b) = (i / d_b, i % d_b);
                let (a2, b2) = (j / d_b, j % d_b);
                let mut terms = vec![LinearEntry::new(s_block, i, j, ONE)];
                if let Some((block, offset)) = extra {
                    terms.push(LinearEntry::new(block, offset + i, offset + j, ONE));
                }
                if a == a2 {
                    let lam = self.marginal[a];
                    match sigma {
                        None => terms.push(LinearEntry::new(x_block, b, b2, real(-lam))),
                        Some(s) => {
                            let coef = s[(b, b2)] * (-lam);
                            if coef.norm() > 0.0 {
                                // t σ_{bb'} is the complex number coef·t; t is real.
                                terms.push(LinearEntry::new(x_block, 0, 0, coef));
                            }
                        }
                    }
                }
                let target = rhs.map_or(C64::new(0.0, 0.0), |r| r[(i, j)]);
                if sigma.is_some() {
                    add_with_scalar_block(p, &terms, x_block, target);
                } else {
                    p.add_complex_equality(&terms, target);
                }
            }
        }
    }
}

/// Complex equality where one term multiplies the real scalar block
/// `scalar` by a complex coefficient. The scalar block's entry contributes
/// `Re(coef)·t` to the real part and `Im(coef)·t` to the imaginary part.
fn add_with_scalar_block(p: &mut SdpProblem, terms: &[LinearEntry], scalar: usize, target: C64) {
    let split = |rotate: bool| -> Vec<LinearEntry> {
        terms
            .iter()
            .filter_map(|e| {
                if e.block == scalar {
                    let v = if rotate { e.coef.im } else { e.coef.re };
                    (v != 0.0).then(|| LinearEntry::new(scalar, 0, 0, real(v)))
                } else {
                    let coef = if rotate { e.coef * C64::new(0.0, -1.0) } else { e.coef };
                    Some(LinearEntry { coef, ..*e })
                }
            })
            .collect()
    };
    p.add_real_equality(&split(false), target.re);
    p.add_real_equality(&split(true), target.im);
}

fn field_for(ms: &[&CMatrix]) -> Field {
    if ms.iter().all(|m| is_real(m)) {
        Field::Real
    } else {
        Field::Complex
    }
}

/// Normalized witness, padded by `1e-12` (spread uniformly) on the kernel
/// and renormalized, so it is strictly positive.
fn padded_witness(x: &CMatrix) -> Result<DensityOperator> {
    let base = DensityOperator::from_approximate(x)?;
    let eig = base.eig();
    let kernel = eig.eigenvalues.iter().filter(|&&l| l <= 1e-12).count();
    if kernel == 0 {
        return Ok(base);
    }
    let pad = eig.reconstruct_with(|l| if l <= 1e-12 { 1e-12 / kernel as f64 } else { 0.0 });
    let m = (base.matrix() + pad) / real(1.0 + 1e-12);
    DensityOperator::from_approximate(&m)
}

fn require_optimal(sol: &SdpSolution, what: &str) -> Result<()> {
    if sol.is_optimal() {
        Ok(())
    } else {
        Err(Error::Solver(format!("{what} SDP ended with status {:?}", sol.status)))
    }
}

/// Max-information `min_σ D_max(ρ_AB ‖ ρ_A ⊗ σ_B)` as the SDP
/// `min tr X  s.t. ρ_A ⊗ X ⪰ ρ_AB`. Returns the value in bits and the
/// witness `σ_B = X / tr X`.
pub fn imax(rho_ab: &DensityOperator, d_a: usize, d_b: usize) -> Result<(f64, DensityOperator)> {
    let cmp = Compressed::new(rho_ab, d_a, d_b, None)?;
    let n = cmp.dim();
    let field = field_for(&[&cmp.rho]);
    let mut p = SdpProblem::new();
    let x = p.add_block(d_b, field);
    let s = p.add_block(n, field);
    for b in 0..d_b {
        p.add_objective(LinearEntry::new(x, b, b, ONE));
    }
    let neg = -&cmp.rho;
    cmp.add_operator_inequality(&mut p, s, None, x, None, Some(&neg));
    let sol = solve(&p, &SdpTolerances::default())?;
    require_optimal(&sol, "max-information")?;
    Ok((sol.primal_objective.log2(), padded_witness(&sol.primal[x])?))
}

/// Partially smoothed max-divergence
/// `min { D_max(ρ̃ ‖ ρ_A ⊗ σ_B) : ρ̃ ⪰ 0, ρ̃_A = ρ_A, F(ρ̃, ρ) ≥ 1 − ε² }`.
///
/// With `sigma = None` the minimum also runs over `σ_B` (the smoothed
/// max-information). Solved as one SDP: the fidelity condition is the block
/// `[[ρ, Z], [Z†, ρ̃]] ⪰ 0` with `Re tr Z ≥ √(1−ε²)`, where `ρ = L L†` is
/// replaced by `[[I, Y], [Y†, ρ̃]]`, `Z = L Y`.
pub fn smoothed_dmax(
    rho_ab: &DensityOperator,
    d_a: usize,
    d_b: usize,
    spec: &SmoothingSpec,
    sigma: Option<&DensityOperator>,
) -> Result<SmoothedDmax> {
    SmoothingSpec::with_marginal(spec.epsilon, spec.marginal)?;
    if let Some(s) = sigma {
        if s.dim() != d_b {
            return Err(Error::dim(format!("σ_B has dimension {}, expected {d_b}", s.dim())));
        }
    }
    if spec.epsilon == 0.0 {
        return unsmoothed(rho_ab, d_a, d_b, sigma);
    }
    let infinite = || SmoothedDmax {
        value: f64::INFINITY,
        rho_tilde: rho_ab.clone(),
        sigma: sigma.expect("only reached with a reference").clone(),
    };
    let target_fidelity = (1.0 - spec.epsilon * spec.epsilon).sqrt();

    // A rank-deficient σ_B confines ρ̃ to A ⊗ supp(σ_B). Working in that
    // subspace keeps t strictly feasible, so infeasibility shows up only as a
    // fidelity ceiling that a bounded SDP computes directly.
    let mut b_basis = None;
    let mut sigma_c = sigma.map(|s| s.matrix().clone());
    if let Some(s) = sigma {
        let e = s.eig();
        let keep: Vec<usize> = (0..d_b).filter(|&j| e.eigenvalues[j] > super::SUPPORT_TOL).collect();
        if keep.len() < d_b {
            let v = e.eigenvectors.select_columns(&keep);
            sigma_c = Some(v.adjoint() * s.matrix() * &v);
            b_basis = Some(v);
        }
    }
    let cmp = Compressed::new(rho_ab, d_a, d_b, b_basis.as_ref())?;
    let rho_b = match spec.marginal {
        Marginal::A => None,
        Marginal::B => {
            let full = partial_trace(rho_ab.matrix(), &[d_a, d_b], &[1])?;
            let kept = match &b_basis {
                Some(v) => v.adjoint() * &full * v,
                None => full,
            };
            if 1.0 - crate::linalg::trace(&kept).re > super::LEAKAGE_TOL {
                return Ok(infinite());
            }
            Some(kept)
        }
    };
    let factor = support_factor(&cmp.rho)?.unwrap_or_else(|| {
        let e = herm_eig(&cmp.rho).expect("square");
        let mut l = e.eigenvectors.clone();
        for (j, &lam) in e.eigenvalues.iter().enumerate() {
            l.column_mut(j).scale_mut(lam.max(0.0).sqrt());
        }
        l
    });
    let mut data: Vec<&CMatrix> = vec![&cmp.rho, &factor];
    if let Some(s) = &sigma_c {
        data.push(s);
    }
    let field = field_for(&data);

    if b_basis.is_some() {
        let ceiling = fidelity_ceiling(&cmp, &factor, rho_b.as_ref(), field)?;
        if ceiling < target_fidelity - SdpTolerances::default().feas {
            return Ok(infinite());
        }
    }

    let mut p = SdpProblem::new();
    let cert = add_certificate(&mut p, &cmp, &factor, rho_b.as_ref(), field);
    let (w, r, n) = (cert.block, cert.rank, cmp.dim());
    let s = p.add_block(n, field);
    let x = match sigma {
        None => p.add_block(cmp.d_b, field),
        Some(_) => p.add_block(1, Field::Real),
    };
    let slack = p.add_block(1, Field::Real);
    match sigma {
        None => {
            for b in 0..cmp.d_b {
                p.add_objective(LinearEntry::new(x, b, b, ONE));
            }
        }
        Some(_) => p.add_objective(LinearEntry::new(x, 0, 0, ONE)),
    }
    cmp.add_operator_inequality(&mut p, s, Some((w, r)), x, sigma_c.as_ref(), None);
    // Re tr(L Y) − slack = √(1 − ε²).
    let mut fid = cert.fidelity_terms.clone();
    fid.push(LinearEntry::new(slack, 0, 0, real(-1.0)));
    p.add_real_equality(&fid, target_fidelity);

    let sol = solve(&p, &SdpTolerances::default())?;
    if sigma.is_some() && sol.status == SdpStatus::Infeasible {
        return Ok(infinite());
    }
    require_optimal(&sol, "smoothing")?;
    let tilde = sol.primal[w].view((r, r), (n, n)).into_owned();
    let rho_tilde = DensityOperator::from_approximate(&cmp.lift(&tilde))?;
    let sigma_out = match sigma {
        None => padded_witness(&sol.primal[x])?,
        Some(s) => s.clone(),
    };
    Ok(SmoothedDmax {
        value: sol.primal_objective.log2(),
        rho_tilde,
        sigma: sigma_out,
    })
}

/// The certificate block `W = [[I_r, Y], [Y†, ρ̃]]` with its pinned corner
/// and pinned marginal of `ρ̃`.
struct Certificate {
    block: usize,
    rank: usize,
    /// Terms of `Re tr(L Y)`.
    fidelity_terms: Vec<LinearEntry>,
}

fn add_certificate(
    p: &mut SdpProblem,
    cmp: &Compressed,
    factor: &CMatrix,
    rho_b: Option<&CMatrix>,
    field: Field,
) -> Certificate {
    let n = cmp.dim();
    let r = factor.ncols();
    let w = p.add_block(r + n, field);
    for i in 0..r {
        for j in i..r {
            let target = if i == j { ONE } else { C64::new(0.0, 0.0) };
            p.add_complex_equality(&[LinearEntry::new(w, i, j, ONE)], target);
        }
    }
    let d_b = cmp.d_b;
    let ra = cmp.r();
    match rho_b {
        None => {
            for a in 0..ra {
                for a2 in a..ra {
                    let terms: Vec<LinearEntry> = (0..d_b)
                        .map(|b| LinearEntry::new(w, r + a * d_b + b, r + a2 * d_b + b, ONE))
                        .collect();
                    let target = if a == a2 { real(cmp.marginal[a]) } else { C64::new(0.0, 0.0) };
                    p.add_complex_equality(&terms, target);
                }
            }
        }
        Some(rho_b) => {
            for b in 0..d_b {
                for b2 in b..d_b {
                    let terms: Vec<LinearEntry> = (0..ra)
                        .map(|a| LinearEntry::new(w, r + a * d_b + b, r + a * d_b + b2, ONE))
                        .collect();
                    p.add_complex_equality(&terms, rho_b[(b, b2)]);
                }
            }
            let tr: Vec<LinearEntry> = (0..n).map(|i| LinearEntry::new(w, r + i, r + i, ONE)).collect();
            p.add_real_equality(&tr, 1.0);
        }
    }
    let mut fidelity_terms = Vec::with_capacity(r * n);
    for i in 0..r {
        for j in 0..n {
            let l = factor[(j, i)];
            if l.norm() > 1e-14 {
                fidelity_terms.push(LinearEntry::new(w, i, r + j, l));
            }
        }
    }
    Certificate {
        block: w,
        rank: r,
        fidelity_terms,
    }
}

/// Largest root fidelity with `ρ` over states in the kept subspace with the
/// pinned marginal.
fn fidelity_ceiling(cmp: &Compressed, factor: &CMatrix, rho_b: Option<&CMatrix>, field: Field) -> Result<f64> {
    if factor.ncols() == 0 {
        return Ok(0.0);
    }
    let mut p = SdpProblem::new();
    let cert = add_certificate(&mut p, cmp, factor, rho_b, field);
    for e in &cert.fidelity_terms {
        p.add_objective(LinearEntry { coef: -e.coef, ..*e });
    }
    let sol = solve(&p, &SdpTolerances::default())?;
    require_optimal(&sol, "fidelity ceiling")?;
    Ok(-sol.primal_objective)
}

/// The smoothed max-information: [`smoothed_dmax`] with `σ_B` optimized.
pub fn smoothed_imax(
    rho_ab: &DensityOperator,
    d_a: usize,
    d_b: usize,
    spec: &SmoothingSpec,
) -> Result<SmoothedDmax> {
    smoothed_dmax(rho_ab, d_a, d_b, spec, None)
}

/// At `ε = 0` the fidelity ball is `{ρ}`.
fn unsmoothed(
    rho_ab: &DensityOperator,
    d_a: usize,
    d_b: usize,
    sigma: Option<&DensityOperator>,
) -> Result<SmoothedDmax> {
    match sigma {
        None => {
            let (value, witness) = imax(rho_ab, d_a, d_b)?;
            Ok(SmoothedDmax {
                value,
                rho_tilde: rho_ab.clone(),
                sigma: witness,
            })
        }
        Some(s) => {
            let rho_a = partial_trace(rho_ab.matrix(), &[d_a, d_b], &[0])?;
            let reference = kron(&rho_a, s.matrix());
            let value = dmax_matrices(rho_ab.matrix(), &reference)?;
            Ok(SmoothedDmax {
                value,
                rho_tilde: rho_ab.clone(),
                sigma: s.clone(),
            })
        }
    }
}
