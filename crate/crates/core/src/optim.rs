use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, trace, CMatrix};
use crate::quantum::DensityOperator;

/// Settings shared by the outer (and derivative-free inner) searches.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub restarts: usize,
    pub max_iter: usize,
    pub step_tol: f64,
    pub value_tol: f64,
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            restarts: 4,
            max_iter: 2000,
            step_tol: 1e-8,
            value_tol: 1e-9,
            seed: 0,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 {
            return Err(Error::param("restarts must be at least 1"));
        }
        if self.max_iter == 0 {
            return Err(Error::param("max_iter must be at least 1"));
        }
        if !(self.step_tol > 0.0) || !(self.value_tol > 0.0) {
            return Err(Error::param("optimizer tolerances must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
    pub converged: bool,
}

/// Nelder–Mead minimization of `f` from `x0`. Non-finite values are treated
/// as `+∞`. After each run the simplex is rebuilt around the best point until
/// a rebuild no longer improves the value by `value_tol`.
pub fn nelder_mead(
    f: &mut impl FnMut(&[f64]) -> f64,
    x0: &[f64],
    initial_step: f64,
    cfg: &OptimizerConfig,
) -> Minimum {
    let mut eval = |x: &[f64]| {
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let mut best = x0.to_vec();
    let mut best_val = eval(&best);
    let mut evaluations = 1;
    let mut converged = false;
    let mut step = initial_step;
    for _ in 0..8 {
        let (x, v, used, ok) = simplex_run(&mut eval, &best, best_val, step, cfg, cfg.max_iter);
        evaluations += used;
        let gain = best_val - v;
        if v <= best_val {
            best = x;
            best_val = v;
        }
        converged = ok;
        if !(gain > cfg.value_tol) || evaluations >= cfg.max_iter * 4 {
            break;
        }
        step = (step * 0.5).max(cfg.step_tol * 10.0);
    }
    Minimum {
        x: best,
        value: best_val,
        evaluations,
        converged,
    }
}

fn simplex_run(
    f: &mut impl FnMut(&[f64]) -> f64,
    x0: &[f64],
    f0: f64,
    step: f64,
    cfg: &OptimizerConfig,
    max_iter: usize,
) -> (Vec<f64>, f64, usize, bool) {
    let n = x0.len();
    let mut pts: Vec<Vec<f64>> = vec![x0.to_vec()];
    let mut vals = vec![f0];
    let mut used = 0;
    for i in 0..n {
        let mut p = x0.to_vec();
        p[i] += if p[i].abs() > 1.0 { step * p[i].abs() } else { step };
        vals.push(f(&p));
        pts.push(p);
        used += 1;
    }
    let mut converged = false;
    for _ in 0..max_iter {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]).then(a.cmp(&b)));
        pts = order.iter().map(|&i| pts[i].clone()).collect();
        vals = order.iter().map(|&i| vals[i]).collect();

        let spread = vals[n] - vals[0];
        let size = pts[1..]
            .iter()
            .flat_map(|p| p.iter().zip(&pts[0]).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if spread.abs() <= cfg.value_tol && size <= cfg.step_tol.max(1e-3 * cfg.value_tol.sqrt()) {
            converged = true;
            break;
        }
        if size < 1e-15 {
            converged = spread <= cfg.value_tol;
            break;
        }

        let centroid: Vec<f64> = (0..n)
            .map(|j| pts[..n].iter().map(|p| p[j]).sum::<f64>() / n as f64)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&pts[n])
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };
        let xr = along(1.0);
        let fr = f(&xr);
        used += 1;
        if fr < vals[0] {
            let xe = along(2.0);
            let fe = f(&xe);
            used += 1;
            if fe < fr {
                pts[n] = xe;
                vals[n] = fe;
            } else {
                pts[n] = xr;
                vals[n] = fr;
            }
            continue;
        }
        if fr < vals[n - 1] {
            pts[n] = xr;
            vals[n] = fr;
            continue;
        }
        let (xc, fc) = if fr < vals[n] {
            let x = along(0.5);
            let v = f(&x);
            (x, v)
        } else {
            let x = along(-0.5);
            let v = f(&x);
            (x, v)
        };
        used += 1;
        if fc < vals[n].min(fr) {
            pts[n] = xc;
            vals[n] = fc;
            continue;
        }
        for i in 1..=n {
            let p: Vec<f64> = pts[i]
                .iter()
                .zip(&pts[0])
                .map(|(a, b)| b + 0.5 * (a - b))
                .collect();
            vals[i] = f(&p);
            pts[i] = p;
            used += 1;
        }
    }
    let i = (0..=n)
        .min_by(|&a, &b| vals[a].total_cmp(&vals[b]).then(a.cmp(&b)))
        .unwrap_or(0);
    (pts[i].clone(), vals[i], used, converged)
}

/// `d²` real parameters of a lower-triangular `T`; the state is
/// `T T† / tr(T T†)`.
pub fn factor_len(d: usize) -> usize {
    d * d
}

pub fn density_from_factor(x: &[f64], d: usize) -> Result<DensityOperator> {
    if x.len() != factor_len(d) {
        return Err(Error::dim(format!("{} factor parameters for dimension {d}", x.len())));
    }
    let mut t = CMatrix::zeros(d, d);
    let mut k = d;
    for i in 0..d {
        t[(i, i)] = c(x[i], 0.0);
        for j in 0..i {
            t[(i, j)] = c(x[k], x[k + 1]);
            k += 2;
        }
    }
    let m = &t * t.adjoint();
    let tr = trace(&m).re;
    if !(tr > 1e-300) || !tr.is_finite() {
        return Err(Error::InvalidState("degenerate factor".into()));
    }
    Ok(DensityOperator::from_trusted(m / c(tr, 0.0)))
}

/// Inverse of [`density_from_factor`] via a Cholesky factor of a slightly
/// regularized `ρ`.
pub fn factor_from_density(rho: &DensityOperator) -> Vec<f64> {
    let d = rho.dim();
    let reg = rho.matrix() * c(1.0 - 1e-9, 0.0) + CMatrix::identity(d, d) * c(1e-9 / d as f64, 0.0);
    let l = nalgebra::Cholesky::new(reg).map(|ch| ch.unpack()).unwrap_or_else(|| CMatrix::identity(d, d));
    let mut x = vec![0.0; factor_len(d)];
    let mut k = d;
    for i in 0..d {
        x[i] = l[(i, i)].re;
        for j in 0..i {
            x[k] = l[(i, j)].re;
            x[k + 1] = l[(i, j)].im;
            k += 2;
        }
    }
    x
}

/// Factor of a random full-rank state, for multi-start searches.
pub fn random_factor(rng: &mut impl Rng, d: usize) -> Vec<f64> {
    (0..factor_len(d)).map(|_| rng.random_range(-1.0..1.0)).collect()
}
