use crate::error::{Error, Result};
use crate::linalg::{
    gamma_vector, herm_eig, hermitian_part, hermiticity_error, identity, kron, real, sqrt_psd,
    trace, CMatrix, CVector, HermitianEig,
};

const STATE_TOL: f64 = 1e-9;

/// Unit-trace positive semidefinite operator.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    matrix: CMatrix,
}

impl DensityOperator {
    /// Validates hermiticity, positivity (down to `−1e-9`) and unit trace.
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() || matrix.nrows() == 0 {
            return Err(Error::dim(format!(
                "density operator must be square and nonempty, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let herm = hermiticity_error(&matrix);
        if herm > STATE_TOL {
            return Err(Error::InvalidState(format!("not Hermitian (deviation {herm:e})")));
        }
        let matrix = hermitian_part(&matrix);
        let tr = trace(&matrix).re;
        if (tr - 1.0).abs() > STATE_TOL {
            return Err(Error::InvalidState(format!("trace {tr} differs from 1")));
        }
        let lmin = herm_eig(&matrix)?.min_eigenvalue();
        if lmin < -STATE_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {lmin:e}")));
        }
        Ok(Self { matrix })
    }

    /// Projects an approximately positive operator (for example a solver
    /// output) onto the state space: Hermitian part, negative eigenvalues
    /// clipped, trace renormalized.
    pub fn from_approximate(matrix: &CMatrix) -> Result<Self> {
        let eig = herm_eig(matrix)?;
        let clipped = eig.reconstruct_with(|l| l.max(0.0));
        let tr = trace(&clipped).re;
        if !(tr > 0.0 && tr.is_finite()) {
            return Err(Error::InvalidState("operator has no positive part".into()));
        }
        Ok(Self {
            matrix: hermitian_part(&(clipped / real(tr))),
        })
    }

    pub(crate) fn from_trusted(matrix: CMatrix) -> Self {
        Self {
            matrix: hermitian_part(&matrix),
        }
    }

    pub fn maximally_mixed(d: usize) -> Self {
        Self {
            matrix: identity(d) / real(d as f64),
        }
    }

    pub fn from_diagonal(p: &[f64]) -> Result<Self> {
        Self::new(crate::linalg::diag(p))
    }

    pub fn pure(state: &PureState) -> Self {
        Self {
            matrix: crate::linalg::projector(state.amplitudes()),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn eig(&self) -> HermitianEig {
        herm_eig(&self.matrix).expect("square by construction")
    }

    pub fn sqrt(&self) -> CMatrix {
        sqrt_psd(&self.matrix).expect("PSD by construction")
    }

    pub fn transpose(&self) -> Self {
        Self {
            matrix: self.matrix.transpose(),
        }
    }

    pub fn tensor(&self, other: &Self) -> Self {
        Self {
            matrix: kron(&self.matrix, &other.matrix),
        }
    }

    pub fn tensor_power(&self, n: usize) -> Self {
        let mut acc = self.clone();
        for _ in 1..n {
            acc = acc.tensor(self);
        }
        acc
    }

    /// `(1 − λ) self + λ other`.
    pub fn mix(&self, other: &Self, lambda: f64) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::dim("mixing states of different dimension"));
        }
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::param(format!("mixture weight {lambda} outside [0,1]")));
        }
        Ok(Self {
            matrix: &self.matrix * real(1.0 - lambda) + &other.matrix * real(lambda),
        })
    }

    /// Unitary conjugation `U ρ U†`.
    pub fn conjugate(&self, u: &CMatrix) -> Self {
        Self::from_trusted(u * &self.matrix * u.adjoint())
    }
}

/// Unit vector.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amplitudes: CVector,
}

impl PureState {
    pub fn new(amplitudes: CVector) -> Result<Self> {
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidState(format!("vector norm {norm} differs from 1")));
        }
        Ok(Self { amplitudes })
    }

    /// Normalizes a nonzero vector.
    pub fn normalized(v: CVector) -> Result<Self> {
        let norm = v.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidState("cannot normalize the zero vector".into()));
        }
        Ok(Self {
            amplitudes: v / real(norm),
        })
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn density(&self) -> DensityOperator {
        DensityOperator::pure(self)
    }
}

/// `|ρ⟩ = (√ρ ⊗ I)|γ⟩` on `A' ⊗ A`.
pub fn canonical_purification(rho: &DensityOperator) -> PureState {
    let d = rho.dim();
    let v = kron(&rho.sqrt(), &identity(d)) * gamma_vector(d);
    PureState { amplitudes: v }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, ket, max_abs_diff, partial_trace, ONE};
    use crate::quantum::random_density;

    #[test]
    fn purification_of_pure_and_mixed() {
        let zero = DensityOperator::pure(&PureState::new(ket(2, 0)).unwrap());
        let p = canonical_purification(&zero);
        assert!((p.amplitudes()[0] - ONE).norm() < 1e-12);
        assert!(p.amplitudes().iter().skip(1).all(|z| z.norm() < 1e-12));

        let p = canonical_purification(&DensityOperator::maximally_mixed(2));
        let s = 0.5_f64.sqrt();
        for (i, z) in p.amplitudes().iter().enumerate() {
            let want = if i == 0 || i == 3 { s } else { 0.0 };
            assert!((z - c(want, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn purification_marginal() {
        for seed in 0..20 {
            let rho = random_density(3, 3, seed).unwrap();
            let p = canonical_purification(&rho);
            assert!((p.amplitudes().norm() - 1.0).abs() < 1e-10);
            let proj = crate::linalg::projector(p.amplitudes());
            let marg = partial_trace(&proj, &[3, 3], &[0]).unwrap();
            assert!(max_abs_diff(&marg, rho.matrix()) < 1e-9);
        }
    }

    #[test]
    fn validation() {
        assert!(DensityOperator::new(crate::linalg::diag(&[0.5, 0.6])).is_err());
        assert!(DensityOperator::new(crate::linalg::diag(&[1.5, -0.5])).is_err());
        let mut m = crate::linalg::diag(&[0.5, 0.5]);
        m[(0, 1)] = c(0.1, 0.0);
        assert!(DensityOperator::new(m).is_err());
        assert!(PureState::new(ket(2, 0) * c(2.0, 0.0)).is_err());
    }
}
