use super::support_factor;
use crate::error::{Error, Result};
use crate::linalg::{is_real, kron, identity, nuclear_norm, CMatrix};
use crate::quantum::{joint_output_factor, DensityOperator, QuantumChannel};
use crate::sdp::{solve, Field, LinearEntry, SdpProblem, SdpTolerances};

/// `‖√ρ √σ‖₁`, the root fidelity.
pub fn root_fidelity(rho: &DensityOperator, sigma: &DensityOperator) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::dim("fidelity of states with different dimensions"));
    }
    Ok(nuclear_norm(&(rho.sqrt() * sigma.sqrt())).min(1.0))
}

/// `F(ρ, σ) = (tr √(√ρ σ √ρ))²`.
pub fn fidelity(rho: &DensityOperator, sigma: &DensityOperator) -> Result<f64> {
    root_fidelity(rho, sigma).map(|f| f * f)
}

/// One side of a fidelity block. A full-rank operator is pinned entry by
/// entry; a rank-deficient one `A = L L†` is replaced by `I_r` and its
/// factor moves into the objective, which is an exact change of variables.
struct Side {
    pinned: CMatrix,
    factor: Option<CMatrix>,
}

impl Side {
    fn new(a: &CMatrix) -> Result<Self> {
        Ok(match support_factor(a)? {
            Some(l) => Side {
                pinned: identity(l.ncols()),
                factor: Some(l),
            },
            None => Side {
                pinned: a.clone(),
                factor: None,
            },
        })
    }

    fn dim(&self) -> usize {
        self.pinned.nrows()
    }
}

/// `max Re tr(C Y)` subject to `[[A, Y], [Y†, B]] ⪰ 0`.
pub(crate) fn block_sdp(
    a: &CMatrix,
    b: &CMatrix,
    weight: &CMatrix,
    tol: &SdpTolerances,
) -> Result<f64> {
    let left = Side::new(a)?;
    let right = Side::new(b)?;
    let (ra, rb) = (left.dim(), right.dim());
    // Objective Re tr(C L_a Y' L_b†) = Re tr(G Y') with G = L_b† C L_a.
    let mut g = weight.clone();
    if let Some(la) = &left.factor {
        g = &g * la;
    }
    if let Some(lb) = &right.factor {
        g = lb.adjoint() * &g;
    }
    let field = if is_real(&left.pinned) && is_real(&right.pinned) && is_real(&g) {
        Field::Real
    } else {
        Field::Complex
    };
    let mut p = SdpProblem::new();
    let k = p.add_block(ra + rb, field);
    for i in 0..ra {
        for j in 0..rb {
            let gji = g[(j, i)];
            if gji.norm() > 0.0 {
                p.add_objective(LinearEntry::new(k, i, ra + j, -gji));
            }
        }
    }
    for (offset, side) in [(0, &left), (ra, &right)] {
        for i in 0..side.dim() {
            for j in i..side.dim() {
                p.add_complex_equality(
                    &[LinearEntry::new(k, offset + i, offset + j, crate::linalg::ONE)],
                    side.pinned[(i, j)],
                );
            }
        }
    }
    let sol = solve(&p, tol)?;
    if !sol.is_optimal() {
        return Err(Error::Solver(format!(
            "fidelity SDP ended with status {:?}",
            sol.status
        )));
    }
    Ok(-sol.primal_objective)
}

/// Root fidelity as the block semidefinite program
/// `max Re tr Y  s.t. [[ρ, Y], [Y†, σ]] ⪰ 0`.
pub fn root_fidelity_sdp(rho: &DensityOperator, sigma: &DensityOperator) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::dim("fidelity of states with different dimensions"));
    }
    block_sdp(
        rho.matrix(),
        sigma.matrix(),
        &identity(rho.dim()),
        &SdpTolerances::default(),
    )
}

fn check_pair(n: &QuantumChannel, m: &QuantumChannel) -> Result<()> {
    if n.d_in() != m.d_in() || n.d_out() != m.d_out() {
        return Err(Error::dim("channels must share input and output dimensions"));
    }
    Ok(())
}

/// Root fidelity between the joint outputs of two channels on `ρ`.
pub fn f_channel(n: &QuantumChannel, m: &QuantumChannel, rho: &DensityOperator) -> Result<f64> {
    check_pair(n, m)?;
    let l = joint_output_factor(n, rho)?;
    let lt = joint_output_factor(m, rho)?;
    Ok(nuclear_norm(&(l.adjoint() * lt)).min(1.0))
}

/// The same quantity from the Choi matrices, as an SDP that is linear in
/// `ρ`: `max Re tr((ρ ⊗ I) Z)  s.t. [[J, Z], [Z†, J̃]] ⪰ 0`.
pub fn f_choi_sdp(j: &CMatrix, jt: &CMatrix, rho: &DensityOperator) -> Result<f64> {
    let d_in = rho.dim();
    if j.shape() != jt.shape() || j.nrows() % d_in != 0 || j.nrows() != j.ncols() {
        return Err(Error::dim("Choi matrices do not match the input state"));
    }
    let d_out = j.nrows() / d_in;
    let weight = kron(rho.matrix(), &identity(d_out));
    block_sdp(j, jt, &weight, &SdpTolerances::default())
}
