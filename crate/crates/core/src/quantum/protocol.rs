use rand::Rng;

use super::channel::QuantumChannel;
use super::constructors::{random_channel_with, random_density_with};
use super::state::{DensityOperator, PureState};
use crate::error::{Error, Result};
use crate::linalg::{
    c, herm_eig, hermiticity_error, identity, kron, kron_all, ket, max_abs_diff, mat_func,
    partial_trace, permute_subsystems, permute_vector, projector, real, CMatrix, CVector,
};

const POVM_TOL: f64 = 1e-8;

/// One-way entanglement-assisted protocol from `A` to `B`: Alice measures
/// `A ⊗ K'` with the POVM `{E_m}` and sends `m`; Bob applies decoder `m`
/// to his share `K` of the pre-shared pure state on `K ⊗ K'`.
#[derive(Debug, Clone)]
pub struct ELOCCProtocol {
    d_a: usize,
    d_k: usize,
    shared_state: PureState,
    povm: Vec<CMatrix>,
    decoders: Vec<QuantumChannel>,
}

impl ELOCCProtocol {
    pub fn new(
        d_a: usize,
        shared_state: PureState,
        povm: Vec<CMatrix>,
        decoders: Vec<QuantumChannel>,
    ) -> Result<Self> {
        let bad = |msg: String| Err(Error::InvalidProtocol(msg));
        if povm.is_empty() || povm.len() != decoders.len() {
            return bad(format!(
                "{} POVM elements for {} decoders",
                povm.len(),
                decoders.len()
            ));
        }
        let d_k = decoders[0].d_in();
        let d_b = decoders[0].d_out();
        if decoders.iter().any(|d| d.d_in() != d_k || d.d_out() != d_b) {
            return bad("decoders must share input and output dimensions".into());
        }
        if shared_state.dim() != d_k * d_k {
            return bad(format!(
                "shared state of dimension {} does not live on K ⊗ K' with d_K = {d_k}",
                shared_state.dim()
            ));
        }
        let n = d_a * d_k;
        let mut total = CMatrix::zeros(n, n);
        for (m, e) in povm.iter().enumerate() {
            if e.nrows() != n || e.ncols() != n {
                return bad(format!("POVM element {m} is not {n}x{n}"));
            }
            if hermiticity_error(e) > 1e-9 {
                return bad(format!("POVM element {m} is not Hermitian"));
            }
            let lmin = herm_eig(e)?.min_eigenvalue();
            if lmin < -1e-9 {
                return bad(format!("POVM element {m} has eigenvalue {lmin:e}"));
            }
            total += e;
        }
        let dev = max_abs_diff(&total, &identity(n));
        if dev > POVM_TOL {
            return bad(format!("POVM elements sum to identity only within {dev:e}"));
        }
        Ok(Self {
            d_a,
            d_k,
            shared_state,
            povm,
            decoders,
        })
    }

    pub fn d_a(&self) -> usize {
        self.d_a
    }

    pub fn d_b(&self) -> usize {
        self.decoders[0].d_out()
    }

    pub fn d_k(&self) -> usize {
        self.d_k
    }

    pub fn alphabet_size(&self) -> usize {
        self.povm.len()
    }

    pub fn shared_state(&self) -> &PureState {
        &self.shared_state
    }

    pub fn povm(&self) -> &[CMatrix] {
        &self.povm
    }

    pub fn decoders(&self) -> &[QuantumChannel] {
        &self.decoders
    }

    /// `Σ_m Φ_m(tr_{AK'}[(E_m ⊗ I_K)(X ⊗ |σ⟩⟨σ|)])`, linear in any `X`.
    pub fn apply(&self, x: &CMatrix) -> CMatrix {
        let (d_a, d_k) = (self.d_a, self.d_k);
        let sigma = projector(self.shared_state.amplitudes());
        // Order (A, K, K') → (A, K', K) so the POVM acts on the leading factors.
        let joint = permute_subsystems(&kron(x, &sigma), &[d_a, d_k, d_k], &[0, 2, 1])
            .expect("dimensions fixed at construction");
        let id_k = identity(d_k);
        let mut out = CMatrix::zeros(self.d_b(), self.d_b());
        for (e, dec) in self.povm.iter().zip(&self.decoders) {
            let post = kron(e, &id_k) * &joint;
            let bob = partial_trace(&post, &[d_a, d_k, d_k], &[2]).expect("dimensions fixed");
            out += dec.apply(&bob);
        }
        out
    }

    /// Random protocol: Haar-ish shared state, a POVM normalized from
    /// Ginibre positive operators, and random decoders.
    pub fn random(
        rng: &mut impl Rng,
        d_a: usize,
        d_b: usize,
        d_k: usize,
        alphabet: usize,
    ) -> Result<Self> {
        let v = CVector::from_fn(d_k * d_k, |_, _| {
            c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        let shared = PureState::normalized(v)?;
        let n = d_a * d_k;
        let raw: Vec<CMatrix> = (0..alphabet)
            .map(|_| random_density_with(rng, n, n).map(DensityOperator::into_matrix))
            .collect::<Result<_>>()?;
        let total = raw.iter().fold(CMatrix::zeros(n, n), |acc, e| acc + e);
        let inv_sqrt = mat_func(&total, |l| 1.0 / l.sqrt())?;
        let povm = raw
            .iter()
            .map(|e| crate::linalg::hermitian_part(&(&inv_sqrt * e * &inv_sqrt)))
            .collect();
        let decoders = (0..alphabet)
            .map(|_| {
                let rank = rng.random_range(1..=d_k * d_b);
                let rank = rank.max(d_k.div_ceil(d_b));
                random_channel_with(rng, d_k, d_b, rank)
            })
            .collect::<Result<_>>()?;
        Self::new(d_a, shared, povm, decoders)
    }

    /// Protocol realizing `(1 − λ) P0 + λ P1`: one extra maximally
    /// correlated qubit pair `√(1−λ)|00⟩ + √λ|11⟩` on `R R'` selects which
    /// protocol both parties run. `K = R K0 K1`, `K' = R' K0' K1'`.
    pub fn convex_mixture(p0: &Self, p1: &Self, lambda: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::param(format!("mixture weight {lambda} outside [0,1]")));
        }
        if p0.d_a != p1.d_a || p0.d_b() != p1.d_b() {
            return Err(Error::InvalidProtocol(
                "mixed protocols must share input and output dimensions".into(),
            ));
        }
        let (d_a, k0, k1) = (p0.d_a, p0.d_k, p1.d_k);
        let mut coin = CVector::zeros(4);
        coin[0] = real((1.0 - lambda).sqrt());
        coin[3] = real(lambda.sqrt());
        let raw = coin
            .kronecker(p0.shared_state.amplitudes())
            .kronecker(p1.shared_state.amplitudes());
        let shared = permute_vector(&raw, &[2, 2, k0, k0, k1, k1], &[0, 2, 4, 1, 3, 5])?;
        let shared = PureState::normalized(shared)?;

        let bit = |b: usize| projector(&ket(2, b));
        let mut povm = Vec::new();
        for e in &p0.povm {
            let op = kron_all(&[bit(0), e.clone(), identity(k1)]);
            povm.push(permute_subsystems(&op, &[2, d_a, k0, k1], &[1, 0, 2, 3])?);
        }
        for e in &p1.povm {
            let op = kron_all(&[bit(1), e.clone(), identity(k0)]);
            povm.push(permute_subsystems(&op, &[2, d_a, k1, k0], &[1, 0, 3, 2])?);
        }

        let bra = |d: usize, i: usize| ket(d, i).adjoint();
        let as_mat = |v: nalgebra::RowDVector<crate::linalg::C64>| {
            CMatrix::from_row_slice(1, v.len(), v.as_slice())
        };
        let d_k = 2 * k0 * k1;
        let mut decoders = Vec::new();
        for dec in &p0.decoders {
            let mut kraus = Vec::new();
            for r in 0..2 {
                for j in 0..k1 {
                    let sel = kron_all(&[as_mat(bra(2, r)), identity(k0), as_mat(bra(k1, j))]);
                    kraus.extend(dec.kraus().iter().map(|k| k * &sel));
                }
            }
            decoders.push(QuantumChannel::new(d_k, p0.d_b(), kraus)?);
        }
        for dec in &p1.decoders {
            let mut kraus = Vec::new();
            for r in 0..2 {
                for j in 0..k0 {
                    let sel = kron_all(&[as_mat(bra(2, r)), as_mat(bra(k0, j)), identity(k1)]);
                    kraus.extend(dec.kraus().iter().map(|k| k * &sel));
                }
            }
            decoders.push(QuantumChannel::new(d_k, p0.d_b(), kraus)?);
        }
        Self::new(d_a, shared, povm, decoders)
    }
}

/// The channel implemented by a protocol, via its Choi matrix.
pub fn elocc_to_channel(p: &ELOCCProtocol) -> Result<QuantumChannel> {
    let (d_a, d_b) = (p.d_a, p.d_b());
    let n = d_a * d_b;
    let mut j = CMatrix::zeros(n, n);
    for a in 0..d_a {
        for b in 0..d_a {
            let mut unit = CMatrix::zeros(d_a, d_a);
            unit[(a, b)] = real(1.0);
            let block = p.apply(&unit);
            j.view_mut((a * d_b, b * d_b), (d_b, d_b)).copy_from(&block);
        }
    }
    QuantumChannel::from_choi(&j, d_a, d_b)
}

/// Standard qubit teleportation: a Bell pair on `K K'`, a Bell measurement
/// `(P_m ⊗ I)|Φ⁺⟩` on `A K'` and the Pauli correction `P_m` on `K`.
pub fn teleportation() -> ELOCCProtocol {
    let paulis = [
        identity(2),
        CMatrix::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)]),
        CMatrix::from_row_slice(2, 2, &[c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)]),
        CMatrix::from_row_slice(2, 2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)]),
    ];
    let phi = crate::linalg::gamma_vector(2) / real(2.0_f64.sqrt());
    let povm = paulis
        .iter()
        .map(|p| projector(&(kron(p, &identity(2)) * &phi)))
        .collect();
    let decoders = paulis
        .iter()
        .map(|p| QuantumChannel::from_trusted(2, 2, vec![p.clone()]))
        .collect();
    ELOCCProtocol::new(2, PureState::normalized(phi).unwrap(), povm, decoders)
        .expect("teleportation is a valid protocol")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{constant_channel, identity_channel, random_density};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn trivial_protocol_is_its_decoder() {
        let tau = random_density(2, 2, 1).unwrap();
        let konst = constant_channel(1, &tau).unwrap();
        let p = ELOCCProtocol::new(
            2,
            PureState::new(ket(1, 0)).unwrap(),
            vec![identity(2)],
            vec![konst],
        )
        .unwrap();
        let ch = elocc_to_channel(&p).unwrap();
        assert!(ch.approx_eq(&constant_channel(2, &tau).unwrap()));
    }

    #[test]
    fn teleportation_is_identity() {
        let ch = elocc_to_channel(&teleportation()).unwrap();
        assert!(ch.choi_distance(&identity_channel(2)) < 1e-9);
    }

    #[test]
    fn mixture_protocol_matches_mixed_channel() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for lambda in [0.0, 0.3, 1.0] {
            let p0 = ELOCCProtocol::random(&mut rng, 2, 2, 2, 3).unwrap();
            let p1 = teleportation();
            let mixed = ELOCCProtocol::convex_mixture(&p0, &p1, lambda).unwrap();
            let n0 = elocc_to_channel(&p0).unwrap();
            let n1 = elocc_to_channel(&p1).unwrap();
            let want = QuantumChannel::mixture(&[&n0, &n1], &[1.0 - lambda, lambda]).unwrap();
            let got = elocc_to_channel(&mixed).unwrap();
            assert!(got.choi_distance(&want) < 1e-9, "λ = {lambda}");
        }
    }

    #[test]
    fn apply_matches_channel_action() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let p = ELOCCProtocol::random(&mut rng, 2, 3, 2, 4).unwrap();
        let ch = elocc_to_channel(&p).unwrap();
        for s in 0..20 {
            let rho = random_density(2, 2, s).unwrap();
            assert!(max_abs_diff(&ch.apply(rho.matrix()), &p.apply(rho.matrix())) < 1e-9);
        }
    }

    #[test]
    fn incomplete_povm_rejected() {
        let r = ELOCCProtocol::new(
            2,
            PureState::new(ket(1, 0)).unwrap(),
            vec![identity(2) * real(0.9)],
            vec![identity_channel(1)],
        );
        assert!(matches!(r, Err(Error::InvalidProtocol(_))));
    }
}
