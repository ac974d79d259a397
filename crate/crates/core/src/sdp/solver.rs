//! Infeasible-start primal-dual path following with Nesterov–Todd scaling
//! and a Mehrotra predictor-corrector step.
//!
//! Complex blocks are embedded as real symmetric blocks of twice the size,
//! `X ↦ [[Re X, −Im X], [Im X, Re X]]`, with every coefficient halved so
//! inner products are preserved. The solver itself only ever sees real
//! symmetric blocks with sparse constraint matrices.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::problem::{Field, SdpProblem};
use crate::error::Result;
use crate::linalg::{c, CMatrix};

type Mat = DMatrix<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SdpTolerances {
    /// Duality gap tolerance, relative to `1 + |primal objective|`.
    pub gap: f64,
    /// Relative primal and dual residual tolerance.
    pub feas: f64,
    pub max_iter: usize,
}

impl Default for SdpTolerances {
    fn default() -> Self {
        Self {
            gap: 1e-8,
            feas: 1e-8,
            max_iter: 200,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SdpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    MaxIterations,
}

#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub status: SdpStatus,
    /// One Hermitian matrix per block, in the problem's own field.
    pub primal: Vec<CMatrix>,
    /// Multipliers `y` of the equality constraints.
    pub dual: Vec<f64>,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub gap: f64,
    pub primal_infeasibility: f64,
    pub dual_infeasibility: f64,
    pub iterations: usize,
}

impl SdpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == SdpStatus::Optimal
    }
}

const STEP_FRACTION: f64 = 0.98;
const NEWTON_SHIFT: f64 = 1e-12;
const CERTIFICATE_SCALE: f64 = 1e8;
const REFINE_PASSES: usize = 8;

/// `(row, col, value)` with `row <= col`.
type Triplets = Vec<(usize, usize, f64)>;

struct RealSdp {
    dims: Vec<usize>,
    c: Vec<Mat>,
    /// For each block, the constraints touching it with their coefficients.
    by_block: Vec<Vec<(usize, Triplets)>>,
    b: Vec<f64>,
    /// Original constraint `i` was divided by `row_scale[i]`.
    row_scale: Vec<f64>,
    /// Original index of each kept constraint.
    kept: Vec<usize>,
    n_original: usize,
}

fn weight(p: usize, q: usize) -> f64 {
    if p == q {
        1.0
    } else {
        2.0
    }
}

impl RealSdp {
    fn embed(problem: &SdpProblem) -> std::result::Result<Self, SdpStatus> {
        let dims: Vec<usize> = problem
            .blocks
            .iter()
            .map(|&(n, f)| if f == Field::Complex { 2 * n } else { n })
            .collect();
        let embed_entries = |k: usize, a: &super::problem::SparseHermitian| -> Triplets {
            let (n, field) = problem.blocks[k];
            let mut out = Vec::with_capacity(a.entries.len() * 4);
            for &(i, j, v) in &a.entries {
                match field {
                    Field::Real => out.push((i, j, v.re)),
                    Field::Complex => {
                        if i == j {
                            out.push((i, i, 0.5 * v.re));
                            out.push((n + i, n + i, 0.5 * v.re));
                        } else {
                            out.push((i, j, 0.5 * v.re));
                            out.push((n + i, n + j, 0.5 * v.re));
                            if v.im != 0.0 {
                                out.push((i, n + j, -0.5 * v.im));
                                out.push((j, n + i, 0.5 * v.im));
                            }
                        }
                    }
                }
            }
            out.retain(|t| t.2 != 0.0);
            out
        };

        let mut c = Vec::with_capacity(dims.len());
        for (k, obj) in problem.objective.iter().enumerate() {
            let mut m = Mat::zeros(dims[k], dims[k]);
            for (p, q, v) in embed_entries(k, obj) {
                m[(p, q)] += v;
                if p != q {
                    m[(q, p)] += v;
                }
            }
            c.push(m);
        }

        let mut by_block: Vec<Vec<(usize, Triplets)>> = vec![Vec::new(); dims.len()];
        let mut b = Vec::new();
        let mut row_scale = Vec::new();
        let mut kept = Vec::new();
        for (orig, con) in problem.constraints.iter().enumerate() {
            let mut terms: Vec<(usize, Triplets)> = Vec::new();
            for (k, a) in &con.terms {
                let t = embed_entries(*k, a);
                if t.is_empty() {
                    continue;
                }
                match terms.iter_mut().find(|(kk, _)| kk == k) {
                    Some((_, existing)) => existing.extend(t),
                    None => terms.push((*k, t)),
                }
            }
            let norm_sq: f64 = terms
                .iter()
                .flat_map(|(_, t)| t.iter())
                .map(|&(p, q, v)| weight(p, q) * v * v)
                .sum();
            if norm_sq == 0.0 {
                if con.rhs.abs() > 1e-12 {
                    return Err(SdpStatus::Infeasible);
                }
                continue;
            }
            let scale = norm_sq.sqrt();
            let idx = b.len();
            for (k, t) in terms {
                let scaled = t.into_iter().map(|(p, q, v)| (p, q, v / scale)).collect();
                by_block[k].push((idx, scaled));
            }
            b.push(con.rhs / scale);
            row_scale.push(scale);
            kept.push(orig);
        }
        Ok(Self {
            dims,
            c,
            by_block,
            b,
            row_scale,
            kept,
            n_original: problem.constraints.len(),
        })
    }

    fn m(&self) -> usize {
        self.b.len()
    }

    fn apply(&self, x: &[Mat]) -> DVector<f64> {
        let mut out = DVector::zeros(self.m());
        for (k, cons) in self.by_block.iter().enumerate() {
            let xk = &x[k];
            for (i, t) in cons {
                let s: f64 = t.iter().map(|&(p, q, v)| weight(p, q) * v * xk[(p, q)]).sum();
                out[*i] += s;
            }
        }
        out
    }

    fn adjoint(&self, y: &DVector<f64>) -> Vec<Mat> {
        let mut out: Vec<Mat> = self.dims.iter().map(|&n| Mat::zeros(n, n)).collect();
        for (k, cons) in self.by_block.iter().enumerate() {
            let ok = &mut out[k];
            for (i, t) in cons {
                let yi = y[*i];
                if yi == 0.0 {
                    continue;
                }
                for &(p, q, v) in t {
                    ok[(p, q)] += yi * v;
                    if p != q {
                        ok[(q, p)] += yi * v;
                    }
                }
            }
        }
        out
    }

    /// Schur complement `M_ij = Σ_k ⟨A_ik, W_k A_jk W_k⟩`.
    fn schur(&self, w: &[Mat]) -> Mat {
        let m = self.m();
        let mut out = Mat::zeros(m, m);
        for (k, cons) in self.by_block.iter().enumerate() {
            let wk = &w[k];
            let n = self.dims[k];
            let dense_cost = (n * n * n) as f64;
            // suffix_nnz[jj] = nnz of cons[jj..]
            let mut suffix_nnz = vec![0usize; cons.len() + 1];
            for jj in (0..cons.len()).rev() {
                suffix_nnz[jj] = suffix_nnz[jj + 1] + cons[jj].1.len();
            }
            for (jj, (j, tj)) in cons.iter().enumerate() {
                let pair_cost = (tj.len() * suffix_nnz[jj]) as f64;
                if pair_cost <= dense_cost + (tj.len() * n) as f64 {
                    for (i, ti) in &cons[jj..] {
                        let mut s = 0.0;
                        for &(p, q, u) in ti {
                            let wu = u * weight(p, q);
                            for &(r, t, v) in tj {
                                let wv = v * weight(r, t);
                                s += 0.5
                                    * wu
                                    * wv
                                    * (wk[(p, r)] * wk[(q, t)] + wk[(p, t)] * wk[(q, r)]);
                            }
                        }
                        out[(*i, *j)] += s;
                        if i != j {
                            out[(*j, *i)] += s;
                        }
                    }
                } else {
                    // W A column by column: (W A)[:, q] += v W[:, p].
                    let mut wa = Mat::zeros(n, n);
                    for &(p, q, v) in tj {
                        wa.column_mut(q).axpy(v, &wk.column(p), 1.0);
                        if p != q {
                            wa.column_mut(p).axpy(v, &wk.column(q), 1.0);
                        }
                    }
                    let bmat = wa * wk;
                    for (i, ti) in &cons[jj..] {
                        let s: f64 = ti
                            .iter()
                            .map(|&(p, q, u)| u * weight(p, q) * bmat[(p, q)])
                            .sum();
                        out[(*i, *j)] += s;
                        if i != j {
                            out[(*j, *i)] += s;
                        }
                    }
                }
            }
        }
        out
    }
}

fn inner(a: &[Mat], b: &[Mat]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.dot(y)).sum()
}

fn frob(a: &[Mat]) -> f64 {
    a.iter().map(|x| x.norm_squared()).sum::<f64>().sqrt()
}

fn symmetrize(m: &mut Mat) {
    let t = m.transpose();
    *m += t;
    *m *= 0.5;
}

/// `X = L Lᵀ` together with `L⁻¹`.
struct Factor {
    l: Mat,
    l_inv: Mat,
}

impl Factor {
    fn new(x: &Mat) -> Self {
        let n = x.nrows();
        if let Some(ch) = x.clone().cholesky() {
            let l = ch.l();
            if let Some(l_inv) = l.solve_lower_triangular(&Mat::identity(n, n)) {
                if l_inv.iter().all(|v| v.is_finite()) {
                    return Self { l, l_inv };
                }
            }
        }
        // Eigen factor fallback for iterates that lost definiteness to round-off.
        let eig = x.clone().symmetric_eigen();
        let floor = 1e-14 * eig.eigenvalues.amax().max(1e-300);
        let s: Vec<f64> = eig.eigenvalues.iter().map(|&l| l.max(floor).sqrt()).collect();
        let mut l = eig.eigenvectors.clone();
        let mut l_inv_t = eig.eigenvectors.clone();
        for j in 0..n {
            l.column_mut(j).scale_mut(s[j]);
            l_inv_t.column_mut(j).scale_mut(1.0 / s[j]);
        }
        Self {
            l,
            l_inv: l_inv_t.transpose(),
        }
    }

    /// `L⁻¹ M L⁻ᵀ`.
    fn whiten(&self, m: &Mat) -> Mat {
        let mut t = &self.l_inv * m * self.l_inv.transpose();
        symmetrize(&mut t);
        t
    }
}

/// Largest `α` with `X + α ΔX ⪰ 0`.
fn max_step(f: &Factor, dx: &Mat) -> f64 {
    let t = f.whiten(dx);
    let lmin = if t.nrows() == 1 {
        t[(0, 0)]
    } else {
        t.symmetric_eigen().eigenvalues.min()
    };
    if lmin >= 0.0 {
        f64::INFINITY
    } else {
        -1.0 / lmin
    }
}

/// Nesterov–Todd scaling for one block: `W = G Gᵀ`, `Gᵀ Z G = G⁻¹ X G⁻ᵀ = diag(d)`.
struct Scaling {
    g: Mat,
    g_inv: Mat,
    d: Vec<f64>,
    w: Mat,
}

impl Scaling {
    fn new(fx: &Factor, z: &Mat) -> Self {
        let mut t = fx.l.transpose() * z * &fx.l;
        symmetrize(&mut t);
        let eig = t.symmetric_eigen();
        let n = z.nrows();
        let d: Vec<f64> = eig
            .eigenvalues
            .iter()
            .map(|&l| l.max(1e-300).sqrt())
            .collect();
        let mut g = &fx.l * &eig.eigenvectors;
        for j in 0..n {
            g.column_mut(j).scale_mut(1.0 / d[j].sqrt());
        }
        let mut g_inv = eig.eigenvectors.transpose() * &fx.l_inv;
        for i in 0..n {
            g_inv.row_mut(i).scale_mut(d[i].sqrt());
        }
        let mut w = &g * g.transpose();
        symmetrize(&mut w);
        Self { g, g_inv, d, w }
    }

    /// Right-hand side `G H Gᵀ` of `ΔX + W ΔZ W` for the corrector.
    fn corrector_rhs(&self, sigma_mu: f64, dx: &Mat, dz: &Mat) -> Mat {
        let n = self.d.len();
        let xh = &self.g_inv * dx * self.g_inv.transpose();
        let zh = self.g.transpose() * dz * &self.g;
        let cross = &xh * &zh + &zh * &xh;
        let mut h = Mat::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let mut num = -cross[(i, j)];
                if i == j {
                    num += 2.0 * sigma_mu - 2.0 * self.d[i] * self.d[i];
                }
                h[(i, j)] = num / (self.d[i] + self.d[j]);
            }
        }
        let mut out = &self.g * h * self.g.transpose();
        symmetrize(&mut out);
        out
    }
}

struct Iterate {
    x: Vec<Mat>,
    y: DVector<f64>,
    z: Vec<Mat>,
}

struct Measures {
    pobj: f64,
    dobj: f64,
    gap: f64,
    pinf: f64,
    dinf: f64,
}

impl Measures {
    fn score(&self) -> f64 {
        let rel = self.gap / (1.0 + self.pobj.abs());
        rel.max(self.pinf).max(self.dinf)
    }
}

/// Solves a standard-form SDP. Never panics on numerical trouble: a
/// singular Newton system ends the run with `MaxIterations` and the best
/// iterate seen so far.
pub fn solve(problem: &SdpProblem, tol: &SdpTolerances) -> Result<SdpSolution> {
    problem.validate()?;
    let sdp = match RealSdp::embed(problem) {
        Ok(s) => s,
        Err(status) => return Ok(empty_solution(problem, status)),
    };
    Ok(run(&sdp, problem, tol))
}

fn empty_solution(problem: &SdpProblem, status: SdpStatus) -> SdpSolution {
    SdpSolution {
        status,
        primal: problem
            .blocks
            .iter()
            .map(|&(n, _)| CMatrix::zeros(n, n))
            .collect(),
        dual: vec![0.0; problem.constraints.len()],
        primal_objective: f64::NAN,
        dual_objective: f64::NAN,
        gap: f64::NAN,
        primal_infeasibility: f64::NAN,
        dual_infeasibility: f64::NAN,
        iterations: 0,
    }
}

fn initial_point(sdp: &RealSdp) -> Iterate {
    let mut x = Vec::new();
    let mut z = Vec::new();
    for (k, &n) in sdp.dims.iter().enumerate() {
        let nf = n as f64;
        let mut xi: f64 = 10.0_f64.max(nf.sqrt());
        let mut zeta: f64 = 10.0_f64.max(nf.sqrt()).max(sdp.c[k].norm());
        for (i, t) in &sdp.by_block[k] {
            let a_norm = t
                .iter()
                .map(|&(p, q, v)| weight(p, q) * v * v)
                .sum::<f64>()
                .sqrt();
            xi = xi.max(nf.sqrt() * (1.0 + sdp.b[*i].abs()) / (1.0 + a_norm));
            zeta = zeta.max(a_norm);
        }
        x.push(Mat::identity(n, n) * xi);
        z.push(Mat::identity(n, n) * zeta);
    }
    Iterate {
        x,
        y: DVector::zeros(sdp.m()),
        z,
    }
}

fn measures(sdp: &RealSdp, it: &Iterate) -> (Measures, DVector<f64>, Vec<Mat>) {
    let ax = sdp.apply(&it.x);
    let rp = DVector::from_column_slice(&sdp.b) - ax;
    let aty = sdp.adjoint(&it.y);
    let rd: Vec<Mat> = (0..sdp.dims.len())
        .map(|k| &sdp.c[k] - &it.z[k] - &aty[k])
        .collect();
    let pobj = inner(&sdp.c, &it.x);
    let dobj = sdp.b.iter().zip(it.y.iter()).map(|(b, y)| b * y).sum();
    let comp = inner(&it.x, &it.z);
    let b_norm = sdp.b.iter().map(|v| v * v).sum::<f64>().sqrt();
    let c_norm = frob(&sdp.c);
    let m = Measures {
        pobj,
        dobj,
        gap: comp.max((pobj - dobj).abs()),
        pinf: rp.norm() / (1.0 + b_norm),
        dinf: frob(&rd) / (1.0 + c_norm),
    };
    (m, rp, rd)
}

fn run(sdp: &RealSdp, problem: &SdpProblem, tol: &SdpTolerances) -> SdpSolution {
    let nblocks = sdp.dims.len();
    let barrier: f64 = sdp.dims.iter().sum::<usize>() as f64;
    let mut it = initial_point(sdp);
    let mut best: Option<(f64, Iterate)> = None;
    let mut status = SdpStatus::MaxIterations;
    let mut stalls = 0;
    let mut iterations = 0;
    let mut use_qr = false;
    let b_norm = sdp.b.iter().map(|v| v * v).sum::<f64>().sqrt();

    for iter in 0..=tol.max_iter {
        iterations = iter;
        let (meas, rp, rd) = measures(sdp, &it);
        if !meas.pobj.is_finite() || !meas.dobj.is_finite() {
            break;
        }
        let score = meas.score();
        if best.as_ref().is_none_or(|(s, _)| score < *s) {
            best = Some((
                score,
                Iterate {
                    x: it.x.clone(),
                    y: it.y.clone(),
                    z: it.z.clone(),
                },
            ));
        }
        if meas.pinf <= tol.feas
            && meas.dinf <= tol.feas
            && meas.gap <= tol.gap * (1.0 + meas.pobj.abs())
        {
            status = SdpStatus::Optimal;
            break;
        }
        // Infeasibility certificates: normalized (y, Z) with bᵀy = 1 and
        // Aᵀy + Z ≈ 0, or normalized X with ⟨C, X⟩ = −1 and A(X) ≈ 0.
        if meas.dobj > 0.0 {
            let resid = frob(&sdp.c.iter().zip(&rd).map(|(c, r)| c - r).collect::<Vec<_>>());
            if resid / meas.dobj < 1.0 / CERTIFICATE_SCALE {
                status = SdpStatus::Infeasible;
                break;
            }
        }
        if meas.pobj < 0.0 {
            let ax_norm = (DVector::from_column_slice(&sdp.b) - &rp).norm();
            if ax_norm / -meas.pobj < 1.0 / CERTIFICATE_SCALE {
                status = SdpStatus::Unbounded;
                break;
            }
        }
        if iter == tol.max_iter {
            break;
        }

        let mu = inner(&it.x, &it.z) / barrier;
        let fx: Vec<Factor> = it.x.iter().map(Factor::new).collect();
        let fz: Vec<Factor> = it.z.iter().map(Factor::new).collect();
        let sc: Vec<Scaling> = (0..nblocks).map(|k| Scaling::new(&fx[k], &it.z[k])).collect();
        let w: Vec<Mat> = sc.iter().map(|s| s.w.clone()).collect();

        let mut newton = if use_qr {
            Newton::qr(sdp, &sc, &rd)
        } else {
            Newton::cholesky(sdp, &w, &rd)
        };
        if newton.is_none() && use_qr {
            newton = Newton::cholesky(sdp, &w, &rd);
        }
        let Some(mut newton) = newton else { break };
        let residual_limit = 0.05 * tol.feas * (1.0 + b_norm);
        let mut direction = |rc: &[Mat]| -> (Vec<Mat>, DVector<f64>, Vec<Mat>) {
            let out = newton.direction(sdp, &rp, &rd, rc);
            // Once W is badly scaled the normal equations lose the primal
            // residual; switch to the orthogonal factorization for good.
            if matches!(newton, Newton::Cholesky(_)) && (&rp - sdp.apply(&out.0)).norm() > residual_limit {
                if let Some(q) = Newton::qr(sdp, &sc, &rd) {
                    use_qr = true;
                    newton = q;
                    return newton.direction(sdp, &rp, &rd, rc);
                }
            }
            out
        };
        let steps = |dx: &[Mat], dz: &[Mat]| -> (f64, f64) {
            let ap = (0..nblocks).map(|k| max_step(&fx[k], &dx[k])).fold(f64::INFINITY, f64::min);
            let ad = (0..nblocks).map(|k| max_step(&fz[k], &dz[k])).fold(f64::INFINITY, f64::min);
            (ap, ad)
        };

        // Predictor (affine scaling direction).
        let rc_aff: Vec<Mat> = it.x.iter().map(|x| -x).collect();
        let (dx_a, _dy_a, dz_a) = direction(&rc_aff);
        let (ap_a, ad_a) = steps(&dx_a, &dz_a);
        let ap_a = ap_a.min(1.0);
        let ad_a = ad_a.min(1.0);
        let mut mu_aff = 0.0;
        for k in 0..nblocks {
            let xa = &it.x[k] + &dx_a[k] * ap_a;
            let za = &it.z[k] + &dz_a[k] * ad_a;
            mu_aff += xa.dot(&za);
        }
        mu_aff /= barrier;
        let sigma = if mu > 0.0 {
            (mu_aff / mu).clamp(0.0, 1.0).powi(3)
        } else {
            0.0
        };

        // Corrector.
        let rc: Vec<Mat> = (0..nblocks)
            .map(|k| sc[k].corrector_rhs(sigma * mu, &dx_a[k], &dz_a[k]))
            .collect();
        let (dx, dy, dz) = direction(&rc);
        if dx.iter().chain(dz.iter()).any(|m| m.iter().any(|v| !v.is_finite()))
            || dy.iter().any(|v| !v.is_finite())
        {
            break;
        }
        let (ap, ad) = steps(&dx, &dz);
        let ap = (STEP_FRACTION * ap).min(1.0);
        let ad = (STEP_FRACTION * ad).min(1.0);
        for k in 0..nblocks {
            it.x[k] += &dx[k] * ap;
            symmetrize(&mut it.x[k]);
            it.z[k] += &dz[k] * ad;
            symmetrize(&mut it.z[k]);
        }
        it.y += dy * ad;

        if ap < 1e-10 && ad < 1e-10 {
            stalls += 1;
            if stalls >= 5 {
                break;
            }
        } else {
            stalls = 0;
        }
    }

    let final_it = if status == SdpStatus::MaxIterations {
        best.map(|(_, b)| b).unwrap_or(it)
    } else {
        it
    };
    let (meas, _, _) = measures(sdp, &final_it);
    extract(sdp, problem, &final_it, &meas, status, iterations)
}


/// Newton system `ΔX + W ΔZ W = R_c`, `ΔZ = R_d − Aᵀ Δy`, `A(ΔX) = r_p`.
enum Newton<'a> {
    /// Normal equations `M Δy = …` by an equilibrated, shifted Cholesky
    /// factorization, followed by iterative refinement.
    Cholesky(NormalEquations<'a>),
    /// The same system in Nesterov–Todd scaled coordinates, solved through a
    /// thin QR factorization of the scaled constraint matrix. Avoids forming
    /// `M`, which squares the condition number.
    Qr(Orthogonal<'a>),
}

struct NormalEquations<'a> {
    chol: nalgebra::linalg::Cholesky<f64, nalgebra::Dyn>,
    eq: Vec<f64>,
    w: &'a [Mat],
    wrdw: Vec<Mat>,
}

struct Orthogonal<'a> {
    q: Mat,
    r: Mat,
    scalings: &'a [Scaling],
    rd_hat: Vec<Mat>,
    offsets: Vec<usize>,
}

fn svec_len(n: usize) -> usize {
    n * (n + 1) / 2
}

fn svec_into(m: &Mat, out: &mut [f64]) {
    let mut idx = 0;
    for q in 0..m.ncols() {
        for p in 0..=q {
            out[idx] = if p == q { m[(p, p)] } else { std::f64::consts::SQRT_2 * m[(p, q)] };
            idx += 1;
        }
    }
}

fn smat(v: &[f64], n: usize) -> Mat {
    let mut m = Mat::zeros(n, n);
    let mut idx = 0;
    for q in 0..n {
        for p in 0..=q {
            if p == q {
                m[(p, p)] = v[idx];
            } else {
                let x = v[idx] / std::f64::consts::SQRT_2;
                m[(p, q)] = x;
                m[(q, p)] = x;
            }
            idx += 1;
        }
    }
    m
}

impl<'a> Newton<'a> {
    fn cholesky(sdp: &RealSdp, w: &'a [Mat], rd: &[Mat]) -> Option<Self> {
        // Symmetric diagonal equilibration before the shifted factorization:
        // the Schur diagonal spans many orders of magnitude near the optimum,
        // and a shift relative to the largest entry would swamp small rows.
        let mut schur = sdp.schur(w);
        let m = schur.nrows();
        let eq: Vec<f64> = (0..m)
            .map(|i| {
                let d = schur[(i, i)];
                if d > 0.0 && d.is_finite() {
                    1.0 / d.sqrt()
                } else {
                    1.0
                }
            })
            .collect();
        for j in 0..m {
            for i in 0..m {
                schur[(i, j)] *= eq[i] * eq[j];
            }
        }
        let mut shift = NEWTON_SHIFT;
        let chol = loop {
            let mut shifted = schur.clone();
            for i in 0..m {
                shifted[(i, i)] += shift;
            }
            if let Some(ch) = shifted.cholesky() {
                break ch;
            }
            shift *= 1e3;
            if shift > 1e-4 {
                return None;
            }
        };
        let wrdw = w.iter().zip(rd).map(|(wk, r)| wk * r * wk).collect();
        Some(Newton::Cholesky(NormalEquations { chol, eq, w, wrdw }))
    }

    fn qr(sdp: &RealSdp, scalings: &'a [Scaling], rd: &[Mat]) -> Option<Self> {
        let mut offsets = Vec::with_capacity(sdp.dims.len() + 1);
        offsets.push(0);
        for &n in &sdp.dims {
            offsets.push(offsets.last().unwrap() + svec_len(n));
        }
        let total = *offsets.last().unwrap();
        let m = sdp.m();
        if total < m {
            return None;
        }
        let mut bmat = Mat::zeros(total, m);
        for (k, cons) in sdp.by_block.iter().enumerate() {
            let n = sdp.dims[k];
            let g = &scalings[k].g;
            let mut hat = Mat::zeros(n, n);
            let mut col = vec![0.0; svec_len(n)];
            for (i, t) in cons {
                hat.fill(0.0);
                // (Gᵀ A G)_{ab} = Σ_pq A_pq G_pa G_qb.
                for &(p, q, v) in t {
                    let gp = g.row(p).transpose();
                    let gq = g.row(q).transpose();
                    hat.ger(v, &gp, &gq, 1.0);
                    if p != q {
                        hat.ger(v, &gq, &gp, 1.0);
                    }
                }
                svec_into(&hat, &mut col);
                for (idx, v) in col.iter().enumerate() {
                    bmat[(offsets[k] + idx, *i)] += v;
                }
            }
        }
        let qr = bmat.qr();
        let r = qr.r();
        let rmax = (0..m).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
        if (0..m).any(|i| r[(i, i)].abs() <= 1e-14 * rmax) {
            return None;
        }
        let q = qr.q();
        let rd_hat = scalings
            .iter()
            .zip(rd)
            .map(|(sc, r)| {
                let mut t = sc.g.transpose() * r * &sc.g;
                symmetrize(&mut t);
                t
            })
            .collect();
        Some(Newton::Qr(Orthogonal {
            q,
            r,
            scalings,
            rd_hat,
            offsets,
        }))
    }

    fn direction(
        &self,
        sdp: &RealSdp,
        rp: &DVector<f64>,
        rd: &[Mat],
        rc: &[Mat],
    ) -> (Vec<Mat>, DVector<f64>, Vec<Mat>) {
        match self {
            Newton::Cholesky(ne) => ne.direction(sdp, rp, rd, rc),
            Newton::Qr(o) => o.direction(sdp, rp, rd, rc),
        }
    }
}

impl NormalEquations<'_> {
    fn solve(&self, r: &DVector<f64>) -> DVector<f64> {
        let scaled = DVector::from_fn(r.len(), |i, _| r[i] * self.eq[i]);
        let mut out = self.chol.solve(&scaled);
        for (o, e) in out.iter_mut().zip(&self.eq) {
            *o *= e;
        }
        out
    }

    fn direction(
        &self,
        sdp: &RealSdp,
        rp: &DVector<f64>,
        rd: &[Mat],
        rc: &[Mat],
    ) -> (Vec<Mat>, DVector<f64>, Vec<Mat>) {
        let nblocks = rc.len();
        let w = self.w;
        let tmp: Vec<Mat> = (0..nblocks).map(|k| &rc[k] - &self.wrdw[k]).collect();
        let rhs = rp - sdp.apply(&tmp);
        let mut dy = self.solve(&rhs);
        let atdy = sdp.adjoint(&dy);
        let mut dz: Vec<Mat> = (0..nblocks).map(|k| &rd[k] - &atdy[k]).collect();
        let mut dx: Vec<Mat> = (0..nblocks)
            .map(|k| {
                let mut d = &rc[k] - &w[k] * &dz[k] * &w[k];
                symmetrize(&mut d);
                d
            })
            .collect();
        // Iterative refinement on A(ΔX) = r_p.
        let mut last = f64::INFINITY;
        for _ in 0..REFINE_PASSES {
            let e = rp - sdp.apply(&dx);
            let en = e.norm();
            if en <= 1e-15 * (1.0 + rp.norm()) || en >= 0.5 * last {
                break;
            }
            last = en;
            let corr = self.solve(&e);
            let atc = sdp.adjoint(&corr);
            for k in 0..nblocks {
                dz[k] -= &atc[k];
                let mut upd = &w[k] * &atc[k] * &w[k];
                symmetrize(&mut upd);
                dx[k] += upd;
            }
            dy += corr;
        }
        (dx, dy, dz)
    }
}

impl Orthogonal<'_> {
    /// With `B` the scaled constraint matrix (`Bᵀ = Â`), `B = QR` and
    /// `h = R̂_c − R̂_d`: `ΔX̂ = h + Q(R⁻ᵀ r_p − Qᵀ h)`, `Δy = R⁻¹(R⁻ᵀ r_p − Qᵀ h)`.
    fn direction(
        &self,
        sdp: &RealSdp,
        rp: &DVector<f64>,
        rd: &[Mat],
        rc: &[Mat],
    ) -> (Vec<Mat>, DVector<f64>, Vec<Mat>) {
        let nblocks = rc.len();
        let total = *self.offsets.last().unwrap();
        let mut h = DVector::zeros(total);
        for k in 0..nblocks {
            let sc = &self.scalings[k];
            let mut t = &sc.g_inv * &rc[k] * sc.g_inv.transpose();
            symmetrize(&mut t);
            t -= &self.rd_hat[k];
            let (lo, hi) = (self.offsets[k], self.offsets[k + 1]);
            svec_into(&t, &mut h.as_mut_slice()[lo..hi]);
        }
        let t = self
            .r
            .tr_solve_upper_triangular(rp)
            .unwrap_or_else(|| DVector::zeros(rp.len()));
        let v = t - self.q.tr_mul(&h);
        let dy = self
            .r
            .solve_upper_triangular(&v)
            .unwrap_or_else(|| DVector::zeros(v.len()));
        let dx_hat = h + &self.q * v;
        let atdy = sdp.adjoint(&dy);
        let mut dx = Vec::with_capacity(nblocks);
        let mut dz = Vec::with_capacity(nblocks);
        for k in 0..nblocks {
            let n = sdp.dims[k];
            let (lo, hi) = (self.offsets[k], self.offsets[k + 1]);
            let g = &self.scalings[k].g;
            let mut d = g * smat(&dx_hat.as_slice()[lo..hi], n) * g.transpose();
            symmetrize(&mut d);
            dx.push(d);
            dz.push(&rd[k] - &atdy[k]);
        }
        (dx, dy, dz)
    }
}

fn extract(
    sdp: &RealSdp,
    problem: &SdpProblem,
    it: &Iterate,
    meas: &Measures,
    status: SdpStatus,
    iterations: usize,
) -> SdpSolution {
    let primal = problem
        .blocks
        .iter()
        .enumerate()
        .map(|(k, &(n, field))| {
            let x = &it.x[k];
            match field {
                Field::Real => x.map(|v| c(v, 0.0)),
                Field::Complex => CMatrix::from_fn(n, n, |i, j| {
                    let re = 0.5 * (x[(i, j)] + x[(n + i, n + j)]);
                    let im = 0.5 * (x[(n + i, j)] - x[(i, n + j)]);
                    c(re, im)
                }),
            }
        })
        .collect();
    let mut dual = vec![0.0; sdp.n_original];
    for (idx, &orig) in sdp.kept.iter().enumerate() {
        dual[orig] = it.y[idx] / sdp.row_scale[idx];
    }
    SdpSolution {
        status,
        primal,
        dual,
        primal_objective: meas.pobj,
        dual_objective: meas.dobj,
        gap: meas.gap,
        primal_infeasibility: meas.pinf,
        dual_infeasibility: meas.dinf,
        iterations,
    }
}
