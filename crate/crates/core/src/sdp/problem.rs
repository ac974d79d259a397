use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, C64, ZERO};

/// Scalar field of a block variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Field {
    Real,
    Complex,
}

/// Sparse Hermitian matrix stored as its upper triangle.
///
/// An entry `(i, j, v)` with `i < j` stands for `A[i][j] = v` and
/// `A[j][i] = conj(v)`; diagonal entries carry real values.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseHermitian {
    pub dim: usize,
    pub entries: Vec<(usize, usize, C64)>,
}

impl SparseHermitian {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            entries: Vec::new(),
        }
    }

    /// Adds `v` at `(i, j)` (and its conjugate at `(j, i)`).
    pub fn add(&mut self, i: usize, j: usize, v: C64) {
        let (i, j, v) = if i <= j { (i, j, v) } else { (j, i, v.conj()) };
        if let Some(slot) = self
            .entries
            .iter_mut()
            .find(|(a, b, _)| *a == i && *b == j)
        {
            slot.2 += v;
        } else {
            self.entries.push((i, j, v));
        }
    }

    pub fn from_dense(m: &CMatrix, drop_tol: f64) -> Self {
        let mut out = Self::new(m.nrows());
        for i in 0..m.nrows() {
            for j in i..m.ncols() {
                let v = if i == j {
                    C64::new(m[(i, i)].re, 0.0)
                } else {
                    (m[(i, j)] + m[(j, i)].conj()) * 0.5
                };
                if v.norm() > drop_tol {
                    out.entries.push((i, j, v));
                }
            }
        }
        out
    }

    pub fn to_dense(&self) -> CMatrix {
        let mut m = CMatrix::zeros(self.dim, self.dim);
        for &(i, j, v) in &self.entries {
            m[(i, j)] += v;
            if i != j {
                m[(j, i)] += v.conj();
            }
        }
        m
    }

    /// `Re tr(A X)` for Hermitian `X`.
    pub fn inner(&self, x: &CMatrix) -> f64 {
        self.entries
            .iter()
            .map(|&(i, j, v)| {
                if i == j {
                    v.re * x[(i, i)].re
                } else {
                    2.0 * (v * x[(j, i)]).re
                }
            })
            .sum()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.iter().all(|e| e.2.norm() == 0.0)
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.entries
            .iter()
            .map(|&(i, j, v)| if i == j { v.norm_sqr() } else { 2.0 * v.norm_sqr() })
            .sum()
    }
}

/// One real coefficient `coef` attached to entry `(row, col)` of a block.
#[derive(Debug, Clone, Copy)]
pub struct LinearEntry {
    pub block: usize,
    pub row: usize,
    pub col: usize,
    pub coef: C64,
}

impl LinearEntry {
    pub fn new(block: usize, row: usize, col: usize, coef: C64) -> Self {
        Self {
            block,
            row,
            col,
            coef,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub terms: Vec<(usize, SparseHermitian)>,
    pub rhs: f64,
}

impl Constraint {
    pub fn evaluate(&self, blocks: &[CMatrix]) -> f64 {
        self.terms.iter().map(|(k, a)| a.inner(&blocks[*k])).sum()
    }
}

/// Standard-form SDP: minimize `Σ_k ⟨C_k, X_k⟩` subject to
/// `Σ_k ⟨A_ik, X_k⟩ = b_i` and every `X_k ⪰ 0`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SdpProblem {
    pub blocks: Vec<(usize, Field)>,
    pub objective: Vec<SparseHermitian>,
    pub constraints: Vec<Constraint>,
}

impl SdpProblem {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_block(&mut self, dim: usize, field: Field) -> usize {
        self.blocks.push((dim, field));
        self.objective.push(SparseHermitian::new(dim));
        self.blocks.len() - 1
    }

    pub fn block_dim(&self, k: usize) -> usize {
        self.blocks[k].0
    }

    /// Adds `Re(coef · X[row, col])` to the objective.
    pub fn add_objective(&mut self, e: LinearEntry) {
        let field = self.blocks[e.block].1;
        push_real_part(&mut self.objective[e.block], field, e.row, e.col, e.coef);
    }

    pub fn add_constraint(&mut self, terms: Vec<(usize, SparseHermitian)>, rhs: f64) {
        self.constraints.push(Constraint { terms, rhs });
    }

    /// Adds the real constraint `Re(Σ coef · X[row, col]) = rhs`.
    pub fn add_real_equality(&mut self, terms: &[LinearEntry], rhs: f64) {
        let mut per_block: Vec<(usize, SparseHermitian)> = Vec::new();
        for e in terms {
            let field = self.blocks[e.block].1;
            let dim = self.blocks[e.block].0;
            let slot = match per_block.iter_mut().position(|(k, _)| *k == e.block) {
                Some(p) => p,
                None => {
                    per_block.push((e.block, SparseHermitian::new(dim)));
                    per_block.len() - 1
                }
            };
            push_real_part(&mut per_block[slot].1, field, e.row, e.col, e.coef);
        }
        per_block.retain(|(_, a)| !a.is_empty());
        if per_block.is_empty() && rhs.abs() <= 1e-14 {
            return;
        }
        self.constraints.push(Constraint {
            terms: per_block,
            rhs,
        });
    }

    /// Adds the complex constraint `Σ coef · X[row, col] = target` as its
    /// real and imaginary parts. Parts that vanish identically (for example
    /// the imaginary part over real blocks with real data) are skipped.
    pub fn add_complex_equality(&mut self, terms: &[LinearEntry], target: C64) {
        self.add_real_equality(terms, target.re);
        let rotated: Vec<LinearEntry> = terms
            .iter()
            .map(|e| LinearEntry {
                coef: e.coef * C64::new(0.0, -1.0),
                ..*e
            })
            .collect();
        self.add_real_equality(&rotated, target.im);
    }

    pub fn validate(&self) -> Result<()> {
        if self.constraints.is_empty() {
            return Err(Error::param("an SDP needs at least one constraint"));
        }
        let check = |a: &SparseHermitian, k: usize| -> Result<()> {
            let (dim, field) = self.blocks[k];
            if a.dim != dim {
                return Err(Error::dim(format!(
                    "coefficient of size {} attached to block {k} of size {dim}",
                    a.dim
                )));
            }
            for &(i, j, v) in &a.entries {
                if i > j || j >= dim {
                    return Err(Error::dim(format!("entry ({i},{j}) outside block {k}")));
                }
                if i == j && v.im.abs() > 1e-10 {
                    return Err(Error::param(format!(
                        "non-Hermitian diagonal coefficient in block {k}"
                    )));
                }
                if field == Field::Real && v.im.abs() > 1e-10 {
                    return Err(Error::param(format!(
                        "complex coefficient on real block {k}"
                    )));
                }
            }
            Ok(())
        };
        for (k, c) in self.objective.iter().enumerate() {
            check(c, k)?;
        }
        for con in &self.constraints {
            for (k, a) in &con.terms {
                if *k >= self.blocks.len() {
                    return Err(Error::dim(format!("constraint references block {k}")));
                }
                check(a, *k)?;
            }
        }
        Ok(())
    }

    pub fn objective_value(&self, blocks: &[CMatrix]) -> f64 {
        self.objective
            .iter()
            .zip(blocks)
            .map(|(c, x)| c.inner(x))
            .sum()
    }

    /// Largest absolute constraint violation at the given point.
    pub fn max_residual(&self, blocks: &[CMatrix]) -> f64 {
        self.constraints
            .iter()
            .map(|c| (c.evaluate(blocks) - c.rhs).abs())
            .fold(0.0, f64::max)
    }
}

/// Appends the Hermitian matrix `A` with `Re tr(A X) = Re(coef · X[row, col])`.
fn push_real_part(a: &mut SparseHermitian, field: Field, row: usize, col: usize, coef: C64) {
    if coef == ZERO {
        return;
    }
    if row == col {
        a.add(row, row, C64::new(coef.re, 0.0));
        return;
    }
    match field {
        // X is real symmetric: Re(coef X_rc) = Re(coef) X_rc.
        Field::Real => {
            if coef.re != 0.0 {
                a.add(row, col, C64::new(coef.re * 0.5, 0.0));
            }
        }
        // Re tr(A X) picks up A_cr X_rc + A_rc X_cr = 2 Re(A_cr X_rc).
        Field::Complex => a.add(col, row, coef * 0.5),
    }
}
