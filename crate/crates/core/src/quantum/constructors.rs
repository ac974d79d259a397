use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::channel::QuantumChannel;
use super::state::DensityOperator;
use crate::error::{Error, Result};
use crate::linalg::{c, identity, ket, real, trace, CMatrix, C64};

pub fn identity_channel(d: usize) -> QuantumChannel {
    QuantumChannel::from_trusted(d, d, vec![identity(d)])
}

fn check_probability(p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::param(format!("probability {p} outside [0,1]")));
    }
    Ok(())
}

/// Clock-and-shift operator `X^a Z^b`.
fn weyl(d: usize, a: usize, b: usize) -> CMatrix {
    let omega = std::f64::consts::TAU / d as f64;
    CMatrix::from_fn(d, d, |row, col| {
        if row == (col + a) % d {
            C64::from_polar(1.0, omega * (b * col) as f64)
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

/// `ρ ↦ (1 − p) ρ + p tr(ρ) I/d`.
pub fn depolarizing(d: usize, p: f64) -> Result<QuantumChannel> {
    check_probability(p)?;
    let d2 = (d * d) as f64;
    let mut kraus = Vec::with_capacity(d * d);
    for a in 0..d {
        for b in 0..d {
            let w = if a == 0 && b == 0 {
                1.0 - p + p / d2
            } else {
                p / d2
            };
            if w > 0.0 {
                kraus.push(weyl(d, a, b) * real(w.sqrt()));
            }
        }
    }
    Ok(QuantumChannel::from_trusted(d, d, kraus))
}

/// `ρ ↦ (1 − p) ρ + p diag(ρ)`.
pub fn dephasing(d: usize, p: f64) -> Result<QuantumChannel> {
    check_probability(p)?;
    let mut kraus = Vec::with_capacity(d + 1);
    if p < 1.0 {
        kraus.push(identity(d) * real((1.0 - p).sqrt()));
    }
    if p > 0.0 {
        for i in 0..d {
            let k = ket(d, i);
            kraus.push(&k * k.adjoint() * real(p.sqrt()));
        }
    }
    Ok(QuantumChannel::from_trusted(d, d, kraus))
}

/// `ρ ↦ tr(ρ) τ`.
pub fn constant_channel(d_in: usize, tau: &DensityOperator) -> Result<QuantumChannel> {
    if d_in == 0 {
        return Err(Error::param("input dimension must be positive"));
    }
    let eig = tau.eig();
    let d_out = tau.dim();
    let mut kraus = Vec::new();
    for (j, &lam) in eig.eigenvalues.iter().enumerate() {
        if lam <= 1e-14 {
            continue;
        }
        let v = eig.eigenvectors.column(j) * real(lam.sqrt());
        for i in 0..d_in {
            let mut k = CMatrix::zeros(d_out, d_in);
            k.set_column(i, &v);
            kraus.push(k);
        }
    }
    Ok(QuantumChannel::from_trusted(d_in, d_out, kraus))
}

fn ginibre(rng: &mut impl Rng, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| {
        c(rng.sample(StandardNormal), rng.sample(StandardNormal))
    })
}

/// Haar-random unitary: QR of a Ginibre matrix with the phases of `R`
/// divided out.
pub fn random_unitary(rng: &mut impl Rng, d: usize) -> CMatrix {
    let qr = ginibre(rng, d, d).qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..d {
        let z = r[(j, j)];
        let phase = if z.norm() > 0.0 { z / z.norm() } else { real(1.0) };
        for i in 0..d {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Ginibre state `G G† / tr(G G†)` with `G` of shape `d × rank`.
pub fn random_density_with(rng: &mut impl Rng, d: usize, rank: usize) -> Result<DensityOperator> {
    if d == 0 || rank == 0 || rank > d {
        return Err(Error::param(format!("rank {rank} invalid for dimension {d}")));
    }
    let g = ginibre(rng, d, rank);
    let m = &g * g.adjoint();
    let t = trace(&m).re;
    Ok(DensityOperator::from_trusted(m / real(t)))
}

pub fn random_density(d: usize, rank: usize, seed: u64) -> Result<DensityOperator> {
    random_density_with(&mut ChaCha8Rng::seed_from_u64(seed), d, rank)
}

/// Random channel with the given Kraus rank: a `rank·d_out × d_in`
/// Ginibre matrix orthonormalized into a Stinespring isometry.
pub fn random_channel_with(
    rng: &mut impl Rng,
    d_in: usize,
    d_out: usize,
    kraus_rank: usize,
) -> Result<QuantumChannel> {
    if d_in == 0 || d_out == 0 || kraus_rank == 0 {
        return Err(Error::param("random channel needs positive dimensions and rank"));
    }
    if kraus_rank * d_out < d_in {
        return Err(Error::param(format!(
            "Kraus rank {kraus_rank} too small for an isometry {d_in} → {d_out}"
        )));
    }
    let v = ginibre(rng, kraus_rank * d_out, d_in).qr().q();
    let kraus = (0..kraus_rank)
        .map(|k| v.view((k * d_out, 0), (d_out, d_in)).into_owned())
        .collect();
    Ok(QuantumChannel::from_trusted(d_in, d_out, kraus))
}

pub fn random_channel(
    d_in: usize,
    d_out: usize,
    kraus_rank: usize,
    seed: u64,
) -> Result<QuantumChannel> {
    random_channel_with(&mut ChaCha8Rng::seed_from_u64(seed), d_in, d_out, kraus_rank)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{herm_eig, max_abs_diff, partial_trace};

    fn assert_valid(n: &QuantumChannel) {
        assert!(n.trace_preservation_error() < 1e-8);
        let marg = partial_trace(n.choi(), &[n.d_in(), n.d_out()], &[0]).unwrap();
        assert!(max_abs_diff(&marg, &identity(n.d_in())) < 1e-8);
        assert!(herm_eig(n.choi()).unwrap().min_eigenvalue() > -1e-10);
    }

    #[test]
    fn generated_channels_are_cptp() {
        for d in 2..=4 {
            for p in [0.0, 0.3, 1.0] {
                assert_valid(&depolarizing(d, p).unwrap());
                assert_valid(&dephasing(d, p).unwrap());
            }
            assert_valid(&identity_channel(d));
            assert_valid(&constant_channel(d, &random_density(3, 2, d as u64).unwrap()).unwrap());
        }
        for seed in 0..30 {
            let r = 1 + (seed as usize % 4);
            assert_valid(&random_channel(2, 2, r, seed).unwrap());
            assert_valid(&random_channel(3, 2, r.max(2), seed).unwrap());
        }
    }

    #[test]
    fn known_actions() {
        let rho = random_density(2, 2, 3).unwrap();
        let out = depolarizing(2, 1.0).unwrap().apply(rho.matrix());
        assert!(max_abs_diff(&out, &(identity(2) * real(0.5))) < 1e-14);
        assert!(dephasing(2, 0.0).unwrap().approx_eq(&identity_channel(2)));
        let out = dephasing(3, 1.0).unwrap().apply(rho_3().matrix());
        assert!(out[(0, 1)].norm() < 1e-15 && out[(1, 2)].norm() < 1e-15);
        assert!(depolarizing(2, 1.5).is_err());
        assert!(dephasing(2, -0.1).is_err());
    }

    fn rho_3() -> DensityOperator {
        random_density(3, 3, 1).unwrap()
    }

    #[test]
    fn random_density_rank_and_trace() {
        let rho = random_density(3, 2, 17).unwrap();
        let eig = rho.eig();
        assert_eq!(eig.rank(1e-10), 2);
        assert!((trace(rho.matrix()).re - 1.0).abs() < 1e-10);
        assert_eq!(random_density(3, 2, 17).unwrap(), rho);
        assert!(random_density(2, 3, 0).is_err());
    }

    #[test]
    fn random_unitary_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let u = random_unitary(&mut rng, 4);
        assert!(max_abs_diff(&(u.adjoint() * &u), &identity(4)) < 1e-12);
    }

    #[test]
    fn random_channel_rank_check() {
        assert!(random_channel(4, 2, 1, 0).is_err());
        assert_eq!(random_channel(2, 2, 3, 0).unwrap().kraus_rank(), 3);
    }
}
