use std::sync::OnceLock;

use super::state::DensityOperator;
use super::{CHANNEL_EQ_TOL, TP_TOL};
use crate::error::{Error, Result};
use crate::linalg::{
    herm_eig, identity, kron, max_abs_diff, partial_trace, real, CMatrix, ZERO,
};

/// Completely positive trace-preserving map `d_in → d_out` in Kraus form.
/// The Choi matrix is derived on first use and cached.
#[derive(Debug)]
pub struct QuantumChannel {
    d_in: usize,
    d_out: usize,
    kraus: Vec<CMatrix>,
    choi: OnceLock<CMatrix>,
}

impl Clone for QuantumChannel {
    fn clone(&self) -> Self {
        let choi = OnceLock::new();
        if let Some(j) = self.choi.get() {
            let _ = choi.set(j.clone());
        }
        Self {
            d_in: self.d_in,
            d_out: self.d_out,
            kraus: self.kraus.clone(),
            choi,
        }
    }
}

/// Largest entry of `Σ K†K − I`.
fn tp_deviation(kraus: &[CMatrix], d_in: usize) -> f64 {
    let mut s = CMatrix::zeros(d_in, d_in);
    for k in kraus {
        s += k.adjoint() * k;
    }
    max_abs_diff(&s, &identity(d_in))
}

impl QuantumChannel {
    pub fn new(d_in: usize, d_out: usize, kraus: Vec<CMatrix>) -> Result<Self> {
        if d_in == 0 || d_out == 0 {
            return Err(Error::dim("channel dimensions must be positive"));
        }
        if kraus.is_empty() {
            return Err(Error::param("a channel needs at least one Kraus operator"));
        }
        if let Some(k) = kraus.iter().find(|k| k.nrows() != d_out || k.ncols() != d_in) {
            return Err(Error::dim(format!(
                "Kraus operator is {}x{}, expected {d_out}x{d_in}",
                k.nrows(),
                k.ncols()
            )));
        }
        let deviation = tp_deviation(&kraus, d_in);
        if deviation > TP_TOL {
            return Err(Error::NotTracePreserving { deviation });
        }
        Ok(Self::from_trusted(d_in, d_out, kraus))
    }

    pub(crate) fn from_trusted(d_in: usize, d_out: usize, kraus: Vec<CMatrix>) -> Self {
        Self {
            d_in,
            d_out,
            kraus,
            choi: OnceLock::new(),
        }
    }

    /// Inverse of [`QuantumChannel::choi`]: Kraus operators from the
    /// eigenvectors of `J` with eigenvalue above `1e-10`.
    pub fn from_choi(j: &CMatrix, d_in: usize, d_out: usize) -> Result<Self> {
        let n = d_in * d_out;
        if j.nrows() != n || j.ncols() != n {
            return Err(Error::dim(format!(
                "Choi matrix is {}x{}, expected {n}x{n}",
                j.nrows(),
                j.ncols()
            )));
        }
        let eig = herm_eig(j)?;
        if eig.min_eigenvalue() < -1e-8 {
            return Err(Error::param(format!(
                "Choi matrix not positive (eigenvalue {:e})",
                eig.min_eigenvalue()
            )));
        }
        let marginal = partial_trace(j, &[d_in, d_out], &[0])?;
        let deviation = max_abs_diff(&marginal, &identity(d_in));
        if deviation > 1e-6 {
            return Err(Error::NotTracePreserving { deviation });
        }
        let mut kraus = Vec::new();
        for (col, &lam) in eig.eigenvalues.iter().enumerate() {
            if lam <= 1e-10 {
                continue;
            }
            let s = lam.sqrt();
            let v = eig.eigenvectors.column(col);
            kraus.push(CMatrix::from_fn(d_out, d_in, |b, i| v[i * d_out + b] * s));
        }
        let ch = Self::from_trusted(d_in, d_out, kraus);
        let _ = ch.choi.set(crate::linalg::hermitian_part(j));
        Ok(ch)
    }

    pub fn d_in(&self) -> usize {
        self.d_in
    }

    pub fn d_out(&self) -> usize {
        self.d_out
    }

    pub fn kraus(&self) -> &[CMatrix] {
        &self.kraus
    }

    pub fn kraus_rank(&self) -> usize {
        self.kraus.len()
    }

    /// `J = Σ_k |K_k⟩⟩⟨⟨K_k|` with `|K⟩⟩ = Σ_i |i⟩ ⊗ K|i⟩`.
    pub fn choi(&self) -> &CMatrix {
        self.choi.get_or_init(|| {
            let n = self.d_in * self.d_out;
            let mut j = CMatrix::zeros(n, n);
            for k in &self.kraus {
                let v = vectorize(k);
                j += &v * v.adjoint();
            }
            j
        })
    }

    /// `N(X) = Σ K X K†`, valid for any (not necessarily Hermitian) `X`.
    pub fn apply(&self, x: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(self.d_out, self.d_out);
        for k in &self.kraus {
            out += k * x * k.adjoint();
        }
        out
    }

    pub fn apply_state(&self, rho: &DensityOperator) -> Result<DensityOperator> {
        if rho.dim() != self.d_in {
            return Err(Error::dim(format!(
                "state of dimension {} fed to channel with input dimension {}",
                rho.dim(),
                self.d_in
            )));
        }
        Ok(DensityOperator::from_trusted(self.apply(rho.matrix())))
    }

    /// Heisenberg picture `N†(Y) = Σ K† Y K`.
    pub fn apply_adjoint(&self, y: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(self.d_in, self.d_in);
        for k in &self.kraus {
            out += k.adjoint() * y * k;
        }
        out
    }

    /// Complementary channel `N^c(X)_kl = tr(K_k X K_l†)`.
    pub fn apply_complementary(&self, x: &CMatrix) -> CMatrix {
        let r = self.kraus.len();
        let kx: Vec<CMatrix> = self.kraus.iter().map(|k| k * x).collect();
        CMatrix::from_fn(r, r, |a, b| {
            let mut s = ZERO;
            // tr(K_a X K_b†) = Σ_ij (K_a X)_ij conj(K_b)_ij
            for (u, v) in kx[a].iter().zip(self.kraus[b].iter()) {
                s += u * v.conj();
            }
            s
        })
    }

    /// Adjoint of the complementary channel, `Σ_ab Y_ba K_b† K_a`.
    pub fn apply_complementary_adjoint(&self, y: &CMatrix) -> CMatrix {
        let r = self.kraus.len();
        let mut out = CMatrix::zeros(self.d_in, self.d_in);
        for a in 0..r {
            for b in 0..r {
                let w = y[(b, a)];
                if w == ZERO {
                    continue;
                }
                out += self.kraus[b].adjoint() * &self.kraus[a] * w;
            }
        }
        out
    }

    /// `self` followed by `next`.
    pub fn then(&self, next: &QuantumChannel) -> Result<QuantumChannel> {
        if self.d_out != next.d_in {
            return Err(Error::dim("composed channels do not match"));
        }
        let mut kraus = Vec::with_capacity(self.kraus.len() * next.kraus.len());
        for b in &next.kraus {
            for a in &self.kraus {
                kraus.push(b * a);
            }
        }
        Ok(Self::from_trusted(self.d_in, next.d_out, kraus))
    }

    pub fn tensor(&self, other: &QuantumChannel) -> QuantumChannel {
        let mut kraus = Vec::with_capacity(self.kraus.len() * other.kraus.len());
        for a in &self.kraus {
            for b in &other.kraus {
                kraus.push(kron(a, b));
            }
        }
        Self::from_trusted(self.d_in * other.d_in, self.d_out * other.d_out, kraus)
    }

    pub fn tensor_power(&self, n: usize) -> QuantumChannel {
        let mut acc = self.clone();
        for _ in 1..n {
            acc = acc.tensor(self);
        }
        acc
    }

    /// Convex combination `Σ w_i N_i`, realized by concatenating scaled
    /// Kraus sets.
    pub fn mixture(channels: &[&QuantumChannel], weights: &[f64]) -> Result<QuantumChannel> {
        if channels.is_empty() || channels.len() != weights.len() {
            return Err(Error::param("mixture needs one weight per channel"));
        }
        let (d_in, d_out) = (channels[0].d_in, channels[0].d_out);
        if channels.iter().any(|c| c.d_in != d_in || c.d_out != d_out) {
            return Err(Error::dim("mixed channels must share dimensions"));
        }
        let total: f64 = weights.iter().sum();
        if weights.iter().any(|&w| w < 0.0) || (total - 1.0).abs() > 1e-9 {
            return Err(Error::param("mixture weights must be a probability vector"));
        }
        let mut kraus = Vec::new();
        for (ch, &w) in channels.iter().zip(weights) {
            if w == 0.0 {
                continue;
            }
            let s = real(w.sqrt());
            kraus.extend(ch.kraus.iter().map(|k| k * s));
        }
        Ok(Self::from_trusted(d_in, d_out, kraus))
    }

    /// `X ↦ V N(U X U†) V†`.
    pub fn conjugated(&self, u_in: &CMatrix, v_out: &CMatrix) -> QuantumChannel {
        let kraus = self.kraus.iter().map(|k| v_out * k * u_in).collect();
        Self::from_trusted(self.d_in, self.d_out, kraus)
    }

    /// Max-entry distance between Choi matrices.
    pub fn choi_distance(&self, other: &QuantumChannel) -> f64 {
        if self.d_in != other.d_in || self.d_out != other.d_out {
            return f64::INFINITY;
        }
        max_abs_diff(self.choi(), other.choi())
    }

    pub fn approx_eq(&self, other: &QuantumChannel) -> bool {
        self.choi_distance(other) <= CHANNEL_EQ_TOL
    }

    /// Deviation of `Σ K†K` from the identity.
    pub fn trace_preservation_error(&self) -> f64 {
        tp_deviation(&self.kraus, self.d_in)
    }
}

fn vectorize(k: &CMatrix) -> crate::linalg::CVector {
    let (d_out, d_in) = k.shape();
    crate::linalg::CVector::from_fn(d_in * d_out, |idx, _| k[(idx % d_out, idx / d_out)])
}

/// Isometry `U = Σ_k |k⟩_E ⊗ K_k` from `A` into `E ⊗ B`, so that
/// `tr_E(U ρ U†) = N(ρ)` and `d_E` is the Kraus rank.
pub fn stinespring(n: &QuantumChannel) -> CMatrix {
    let r = n.kraus.len();
    let mut u = CMatrix::zeros(r * n.d_out, n.d_in);
    for (k, op) in n.kraus.iter().enumerate() {
        u.view_mut((k * n.d_out, 0), (n.d_out, n.d_in)).copy_from(op);
    }
    u
}

/// Columns `(√ρ ⊗ I)|K_k⟩⟩`, a factor `L` of the joint output `L L†`.
pub fn joint_output_factor(n: &QuantumChannel, rho: &DensityOperator) -> Result<CMatrix> {
    if rho.dim() != n.d_in {
        return Err(Error::dim(format!(
            "state of dimension {} for channel with input dimension {}",
            rho.dim(),
            n.d_in
        )));
    }
    let s = kron(&rho.sqrt(), &identity(n.d_out));
    let mut l = CMatrix::zeros(n.d_in * n.d_out, n.kraus.len());
    for (k, op) in n.kraus.iter().enumerate() {
        l.set_column(k, &(&s * vectorize(op)));
    }
    Ok(l)
}

/// `(√ρ ⊗ I) J (√ρ ⊗ I)` on `A' ⊗ B`.
pub fn joint_output(n: &QuantumChannel, rho: &DensityOperator) -> Result<DensityOperator> {
    if rho.dim() != n.d_in {
        return Err(Error::dim(format!(
            "state of dimension {} for channel with input dimension {}",
            rho.dim(),
            n.d_in
        )));
    }
    let s = kron(&rho.sqrt(), &identity(n.d_out));
    Ok(DensityOperator::from_trusted(&s * n.choi() * &s))
}
