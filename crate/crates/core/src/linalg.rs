//! Dense complex linear algebra: Hermitian eigendecompositions, spectral
//! matrix functions, tensor products and partial traces.
//!
//! Everything is built on `nalgebra` dense matrices of `Complex64`.
//! Subsystem ordering follows the usual Kronecker convention: for
//! `dims = [d0, d1, ...]` the first subsystem is the most significant index.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Largest operator dimension any routine in the crate will build.
pub const DEFAULT_MAX_DIM: usize = 256;

/// Eigenvalues in `[-PSD_CLAMP, 0]` are treated as exact zeros.
pub const PSD_CLAMP: f64 = 1e-10;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn real(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Spectral decomposition `H = V diag(λ) V†` with ascending `λ`.
#[derive(Debug, Clone)]
pub struct HermitianEig {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: CMatrix,
}

impl HermitianEig {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(0.0)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(0.0)
    }

    /// `V diag(g(λ)) V†`.
    pub fn reconstruct_with(&self, g: impl Fn(f64) -> f64) -> CMatrix {
        let v = &self.eigenvectors;
        let n = self.dim();
        let mut scaled = v.clone();
        for (j, &lam) in self.eigenvalues.iter().enumerate() {
            let s = g(lam);
            for i in 0..n {
                scaled[(i, j)] *= s;
            }
        }
        scaled * v.adjoint()
    }

    /// Eigenvectors whose eigenvalues exceed `threshold`, as columns.
    pub fn support_basis(&self, threshold: f64) -> CMatrix {
        let cols: Vec<usize> = (0..self.dim())
            .filter(|&j| self.eigenvalues[j] > threshold)
            .collect();
        self.eigenvectors.select_columns(&cols)
    }

    pub fn rank(&self, threshold: f64) -> usize {
        self.eigenvalues.iter().filter(|&&l| l > threshold).count()
    }
}

pub fn is_square(m: &CMatrix) -> bool {
    m.nrows() == m.ncols()
}

/// True when every imaginary part is negligible next to the largest entry.
pub fn is_real(m: &CMatrix) -> bool {
    let scale = m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()));
    let tol = 1e-14 * scale.max(1e-300);
    m.iter().all(|z| z.im.abs() <= tol)
}

pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// Largest entrywise deviation from hermiticity.
pub fn hermiticity_error(m: &CMatrix) -> f64 {
    let mut worst = 0.0_f64;
    for i in 0..m.nrows() {
        for j in i..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Eigendecomposition of the Hermitian part of `h`.
///
/// Real symmetric inputs are decomposed in real arithmetic, so their
/// eigenvectors come back real as well.
pub fn herm_eig(h: &CMatrix) -> Result<HermitianEig> {
    if !is_square(h) {
        return Err(Error::dim(format!(
            "eigendecomposition needs a square matrix, got {}x{}",
            h.nrows(),
            h.ncols()
        )));
    }
    let n = h.nrows();
    let sym = hermitian_part(h);
    let (mut values, mut vectors): (Vec<f64>, CMatrix) = if is_real(&sym) {
        let re = sym.map(|z| z.re);
        let eig = re.symmetric_eigen();
        (
            eig.eigenvalues.iter().copied().collect(),
            eig.eigenvectors.map(real),
        )
    } else {
        let eig = sym.clone().symmetric_eigen();
        (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
    };
    // The QR-based routine occasionally overflows on highly degenerate
    // spectra (tensor powers of pure states); Jacobi is slower but robust.
    if !decomposition_ok(&sym, &values, &vectors) {
        (values, vectors) = jacobi_eig(&sym);
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let eigenvalues = order.iter().map(|&k| values[k]).collect();
    let eigenvectors = vectors.select_columns(&order);
    Ok(HermitianEig {
        eigenvalues,
        eigenvectors,
    })
}

fn decomposition_ok(h: &CMatrix, values: &[f64], vectors: &CMatrix) -> bool {
    if values.iter().any(|v| !v.is_finite()) || vectors.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return false;
    }
    let scale = 1.0 + values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let mut scaled = vectors.clone();
    for (j, &lam) in values.iter().enumerate() {
        scaled.column_mut(j).scale_mut(lam);
    }
    let recon = scaled * vectors.adjoint();
    max_abs_diff(&recon, h) <= 1e-11 * scale
}

/// Cyclic Jacobi for Hermitian matrices: each pivot is first made real by
/// a diagonal phase, then annihilated by a real plane rotation.
fn jacobi_eig(h: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = h.nrows();
    let mut a = h.clone();
    let mut v = identity(n);
    let total = a.norm();
    for _ in 0..100 {
        let mut off = 0.0;
        for q in 0..n {
            for p in 0..q {
                off += a[(p, q)].norm_sqr();
            }
        }
        if off.sqrt() <= 1e-16 * total || off == 0.0 {
            break;
        }
        for q in 1..n {
            for p in 0..q {
                let apq = a[(p, q)];
                let g = apq.norm();
                if g == 0.0 || g <= 1e-300 {
                    continue;
                }
                let phase = (apq / g).conj();
                for k in 0..n {
                    a[(k, q)] *= phase;
                    v[(k, q)] *= phase;
                }
                for k in 0..n {
                    a[(q, k)] *= phase.conj();
                }
                let (app, aqq) = (a[(p, p)].re, a[(q, q)].re);
                let tau = (aqq - app) / (2.0 * g);
                let t = if tau == 0.0 {
                    1.0
                } else {
                    tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt())
                };
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = t * cs;
                for k in 0..n {
                    let (kp, kq) = (a[(k, p)], a[(k, q)]);
                    a[(k, p)] = kp * cs - kq * sn;
                    a[(k, q)] = kp * sn + kq * cs;
                    let (vp, vq) = (v[(k, p)], v[(k, q)]);
                    v[(k, p)] = vp * cs - vq * sn;
                    v[(k, q)] = vp * sn + vq * cs;
                }
                for k in 0..n {
                    let (pk, qk) = (a[(p, k)], a[(q, k)]);
                    a[(p, k)] = pk * cs - qk * sn;
                    a[(q, k)] = pk * sn + qk * cs;
                }
                a[(p, q)] = ZERO;
                a[(q, p)] = ZERO;
            }
        }
    }
    ((0..n).map(|i| a[(i, i)].re).collect(), v)
}

/// Spectral function `V diag(f(λ)) V†`.
///
/// Eigenvalues within `PSD_CLAMP` below zero are clamped to zero first. Any
/// eigenvalue on which `f` is not finite is reported as a domain error.
pub fn mat_func(h: &CMatrix, f: impl Fn(f64) -> f64) -> Result<CMatrix> {
    let eig = herm_eig(h)?;
    apply_spectral(&eig, f)
}

pub fn apply_spectral(eig: &HermitianEig, f: impl Fn(f64) -> f64) -> Result<CMatrix> {
    let mut mapped = Vec::with_capacity(eig.dim());
    for &lam in &eig.eigenvalues {
        let x = if (-PSD_CLAMP..0.0).contains(&lam) { 0.0 } else { lam };
        let y = f(x);
        if !y.is_finite() {
            return Err(Error::Domain { eigenvalue: lam });
        }
        mapped.push(y);
    }
    let shadow = HermitianEig {
        eigenvalues: mapped,
        eigenvectors: eig.eigenvectors.clone(),
    };
    Ok(shadow.reconstruct_with(|y| y))
}

/// Square root of a PSD operator.
pub fn sqrt_psd(h: &CMatrix) -> Result<CMatrix> {
    mat_func(h, f64::sqrt)
}

/// `H^p` restricted to the support of `H` (eigenvalues at or below
/// `threshold` map to zero). Defined for negative `p`, as needed by
/// sandwiched quantities.
pub fn pseudo_power(eig: &HermitianEig, p: f64, threshold: f64) -> CMatrix {
    eig.reconstruct_with(|l| if l > threshold { l.powf(p) } else { 0.0 })
}

/// Base-2 logarithm on the support, zero on the kernel.
pub fn pseudo_log2(eig: &HermitianEig, threshold: f64) -> CMatrix {
    eig.reconstruct_with(|l| if l > threshold { l.log2() } else { 0.0 })
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn kron_all(ms: &[CMatrix]) -> CMatrix {
    let mut acc = CMatrix::from_element(1, 1, ONE);
    for m in ms {
        acc = kron(&acc, m);
    }
    acc
}

pub fn identity(d: usize) -> CMatrix {
    CMatrix::identity(d, d)
}

pub fn trace(m: &CMatrix) -> C64 {
    m.diagonal().sum()
}

/// `Re tr(A† B)`, the real Hilbert–Schmidt inner product.
pub fn hs_inner(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x.conj() * y).re).sum()
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter()
        .zip(b.iter())
        .fold(0.0_f64, |acc, (x, y)| acc.max((x - y).norm()))
}

pub fn ket(d: usize, i: usize) -> CVector {
    let mut v = CVector::zeros(d);
    v[i] = ONE;
    v
}

pub fn projector(v: &CVector) -> CMatrix {
    v * v.adjoint()
}

/// Unnormalized maximally entangled vector `Σ_i |ii⟩` on `d ⊗ d`.
pub fn gamma_vector(d: usize) -> CVector {
    let mut v = CVector::zeros(d * d);
    for i in 0..d {
        v[i * d + i] = ONE;
    }
    v
}

pub fn diag(values: &[f64]) -> CMatrix {
    CMatrix::from_diagonal(&DVector::from_iterator(
        values.len(),
        values.iter().map(|&x| real(x)),
    ))
}

fn check_dims(total: usize, dims: &[usize]) -> Result<()> {
    let prod: usize = dims.iter().product();
    if prod != total || dims.iter().any(|&d| d == 0) {
        return Err(Error::dim(format!(
            "subsystem dimensions {dims:?} do not multiply to {total}"
        )));
    }
    Ok(())
}

/// Mixed-radix digits of `index` for the given subsystem dimensions.
fn digits(mut index: usize, dims: &[usize], out: &mut [usize]) {
    for k in (0..dims.len()).rev() {
        out[k] = index % dims[k];
        index /= dims[k];
    }
}

fn compose(digits: &[usize], dims: &[usize], select: &[usize]) -> usize {
    select.iter().fold(0, |acc, &k| acc * dims[k] + digits[k])
}

/// Partial trace keeping the subsystems listed in `keep` (in ascending
/// subsystem order), tracing out the rest.
pub fn partial_trace(m: &CMatrix, dims: &[usize], keep: &[usize]) -> Result<CMatrix> {
    if !is_square(m) {
        return Err(Error::dim("partial trace of a non-square matrix"));
    }
    check_dims(m.nrows(), dims)?;
    let mut keep: Vec<usize> = keep.to_vec();
    keep.sort_unstable();
    keep.dedup();
    if keep.iter().any(|&k| k >= dims.len()) {
        return Err(Error::dim(format!(
            "subsystem index out of range in {keep:?} for {} subsystems",
            dims.len()
        )));
    }
    let traced: Vec<usize> = (0..dims.len()).filter(|k| !keep.contains(k)).collect();
    let d_keep: usize = keep.iter().map(|&k| dims[k]).product();
    let n = m.nrows();
    let mut out = CMatrix::zeros(d_keep, d_keep);
    let mut ri = vec![0; dims.len()];
    let mut ci = vec![0; dims.len()];
    for r in 0..n {
        digits(r, dims, &mut ri);
        let kr = compose(&ri, dims, &keep);
        let tr = compose(&ri, dims, &traced);
        for col in 0..n {
            digits(col, dims, &mut ci);
            if compose(&ci, dims, &traced) != tr {
                continue;
            }
            let kc = compose(&ci, dims, &keep);
            out[(kr, kc)] += m[(r, col)];
        }
    }
    Ok(out)
}

fn permutation_map(dims: &[usize], perm: &[usize]) -> Result<Vec<usize>> {
    let mut seen = vec![false; dims.len()];
    if perm.len() != dims.len() {
        return Err(Error::dim("permutation length differs from subsystem count"));
    }
    for &p in perm {
        if p >= dims.len() || seen[p] {
            return Err(Error::dim(format!("{perm:?} is not a permutation")));
        }
        seen[p] = true;
    }
    let total: usize = dims.iter().product();
    let mut map = vec![0; total];
    let mut dg = vec![0; dims.len()];
    for (old, slot) in map.iter_mut().enumerate() {
        digits(old, dims, &mut dg);
        *slot = compose(&dg, dims, perm);
    }
    Ok(map)
}

/// Reorders tensor factors: subsystem `k` of the result is subsystem
/// `perm[k]` of the input.
pub fn permute_subsystems(m: &CMatrix, dims: &[usize], perm: &[usize]) -> Result<CMatrix> {
    check_dims(m.nrows(), dims)?;
    check_dims(m.ncols(), dims)?;
    let map = permutation_map(dims, perm)?;
    let n = m.nrows();
    let mut out = CMatrix::zeros(n, n);
    for r in 0..n {
        for col in 0..n {
            out[(map[r], map[col])] = m[(r, col)];
        }
    }
    Ok(out)
}

pub fn permute_vector(v: &CVector, dims: &[usize], perm: &[usize]) -> Result<CVector> {
    check_dims(v.len(), dims)?;
    let map = permutation_map(dims, perm)?;
    let mut out = CVector::zeros(v.len());
    for (old, &new) in map.iter().enumerate() {
        out[new] = v[old];
    }
    Ok(out)
}

/// Sum of singular values.
pub fn nuclear_norm(m: &CMatrix) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    m.clone().singular_values().iter().sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_hermitian(d: usize, rng: &mut ChaCha8Rng) -> CMatrix {
        let g = CMatrix::from_fn(d, d, |_, _| {
            c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        hermitian_part(&g)
    }

    #[test]
    fn pauli_z_spectrum() {
        let z = diag(&[1.0, -1.0]);
        let eig = herm_eig(&z).unwrap();
        assert_eq!(eig.eigenvalues, vec![-1.0, 1.0]);
    }

    #[test]
    fn identity_spectrum() {
        let eig = herm_eig(&identity(3)).unwrap();
        assert_eq!(eig.eigenvalues, vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn jacobi_matches_definition() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for d in [1, 2, 5, 9] {
            let h = random_hermitian(d, &mut rng);
            let (values, v) = jacobi_eig(&h);
            assert!(decomposition_ok(&h, &values, &v));
            assert!(max_abs_diff(&(v.adjoint() * &v), &identity(d)) < 1e-12);
        }
    }

    #[test]
    fn degenerate_rank_one_power() {
        // |Φ⁺⟩⟨Φ⁺|^{⊗3} trips the QR iteration into overflow.
        let mut phi = CMatrix::zeros(4, 4);
        for (i, j) in [(0, 0), (0, 3), (3, 0), (3, 3)] {
            phi[(i, j)] = real(0.5);
        }
        let m = kron_all(&[phi.clone(), phi.clone(), phi]);
        let eig = herm_eig(&m).unwrap();
        assert!(eig.eigenvalues.iter().all(|v| v.is_finite()));
        assert!((eig.max_eigenvalue() - 1.0).abs() < 1e-12);
        assert_eq!(eig.rank(1e-10), 1);
    }

    #[test]
    fn non_square_rejected() {
        let m = CMatrix::zeros(2, 3);
        assert!(matches!(herm_eig(&m), Err(Error::Dimension(_))));
    }

    #[test]
    fn eig_reconstruction_and_unitarity() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for trial in 0..1000 {
            let d = 1 + trial % 16;
            let h = random_hermitian(d, &mut rng);
            let eig = herm_eig(&h).unwrap();
            let lam_max = eig.eigenvalues.iter().fold(0.0_f64, |a, l| a.max(l.abs()));
            let back = eig.reconstruct_with(|l| l);
            assert!(max_abs_diff(&back, &h) <= 1e-10 * (1.0 + lam_max));
            let vv = eig.eigenvectors.adjoint() * &eig.eigenvectors;
            assert!(max_abs_diff(&vv, &identity(d)) <= 1e-10);
            assert!(eig.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn matrix_functions() {
        assert!(max_abs_diff(&sqrt_psd(&identity(3)).unwrap(), &identity(3)) < 1e-14);
        let s = sqrt_psd(&diag(&[4.0, 9.0])).unwrap();
        assert!(max_abs_diff(&s, &diag(&[2.0, 3.0])) < 1e-14);
        let half = identity(2).scale(0.5);
        let inv_sqrt = mat_func(&half, |x| x.powf(-0.5)).unwrap();
        let r2 = 2.0_f64.sqrt();
        assert!(max_abs_diff(&inv_sqrt, &diag(&[r2, r2])) < 1e-14);
    }

    #[test]
    fn sqrt_of_negative_is_domain_error() {
        let err = sqrt_psd(&diag(&[-0.5, 1.0])).unwrap_err();
        assert_eq!(err, Error::Domain { eigenvalue: -0.5 });
    }

    #[test]
    fn tiny_negative_eigenvalues_are_clamped() {
        let s = sqrt_psd(&diag(&[-1e-12, 4.0])).unwrap();
        assert!(max_abs_diff(&s, &diag(&[0.0, 2.0])) < 1e-14);
    }

    #[test]
    fn identity_function_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for d in 1..=8 {
            let h = random_hermitian(d, &mut rng);
            let back = mat_func(&h, |x| x).unwrap();
            assert!(max_abs_diff(&back, &h) <= 1e-12);
        }
    }

    #[test]
    fn kron_examples() {
        assert_eq!(kron(&identity(2), &identity(2)), identity(4));
        let k = kron(&diag(&[1.0, 2.0]), &diag(&[3.0, 4.0]));
        assert_eq!(k, diag(&[3.0, 4.0, 6.0, 8.0]));
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let a = random_hermitian(3, &mut rng);
            let b = random_hermitian(2, &mut rng);
            let lhs = trace(&kron(&a, &b));
            assert!((lhs - trace(&a) * trace(&b)).norm() <= 1e-12);
        }
    }

    #[test]
    fn partial_trace_of_bell_state() {
        let mut phi = gamma_vector(2);
        phi.scale_mut(1.0 / 2.0_f64.sqrt());
        let rho = projector(&phi);
        let marg = partial_trace(&rho, &[2, 2], &[0]).unwrap();
        assert!(max_abs_diff(&marg, &identity(2).scale(0.5)) < 1e-15);
    }

    #[test]
    fn partial_trace_of_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = random_hermitian(2, &mut rng);
        let b = random_hermitian(3, &mut rng);
        let ab = kron(&a, &b);
        let ta = partial_trace(&ab, &[2, 3], &[0]).unwrap();
        assert!(max_abs_diff(&ta, &(a.clone() * trace(&b))) < 1e-12);
        let tb = partial_trace(&ab, &[2, 3], &[1]).unwrap();
        assert!(max_abs_diff(&tb, &(b * trace(&a))) < 1e-12);
    }

    #[test]
    fn partial_trace_preserves_trace() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let m = random_hermitian(6, &mut rng);
        for keep in [vec![0], vec![1], vec![]] {
            let t = partial_trace(&m, &[2, 3], &keep).unwrap();
            assert!((trace(&t) - trace(&m)).norm() <= 1e-12);
        }
        let full = partial_trace(&m, &[2, 3], &[]).unwrap();
        assert_eq!(full.shape(), (1, 1));
    }

    #[test]
    fn partial_trace_dims_mismatch() {
        let m = identity(6);
        assert!(matches!(
            partial_trace(&m, &[2, 2], &[0]),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn permutation_swaps_factors() {
        let a = diag(&[1.0, 2.0]);
        let b = diag(&[3.0, 5.0, 7.0]);
        let ab = kron(&a, &b);
        let ba = permute_subsystems(&ab, &[2, 3], &[1, 0]).unwrap();
        assert!(max_abs_diff(&ba, &kron(&b, &a)) < 1e-15);
        let v = kron(&CMatrix::from_column_slice(2, 1, &[ONE, real(2.0)]), &CMatrix::from_column_slice(3, 1, ket(3, 1).as_slice()));
        let w = permute_vector(&v.column(0).into_owned(), &[2, 3], &[1, 0]).unwrap();
        assert_eq!(w[2], ONE);
        assert_eq!(w[3], real(2.0));
    }

    #[test]
    fn real_input_gives_real_eigenvectors() {
        let m = diag(&[0.125; 8]);
        let eig = herm_eig(&m).unwrap();
        assert!(is_real(&eig.eigenvectors));
    }
}
