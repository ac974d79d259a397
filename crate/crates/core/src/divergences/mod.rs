//! Fidelities and divergences. All logarithms are base 2.
//!
//! Support conditions are decided at [`SUPPORT_TOL`]: when the first
//! argument has weight outside the support of the second, divergences
//! return `f64::INFINITY`.

mod fidelity;
mod maxinfo;
mod renyi;

pub use fidelity::{f_channel, f_choi_sdp, fidelity, root_fidelity, root_fidelity_sdp};
pub use maxinfo::{imax, smoothed_dmax, smoothed_imax, Marginal, SmoothedDmax, SmoothingSpec};
pub use renyi::{dmax, relative_entropy, sandwiched_renyi, von_neumann_entropy};

use crate::error::Result;
use crate::linalg::{herm_eig, CMatrix};

/// Eigenvalues at or below this are outside the support.
pub const SUPPORT_TOL: f64 = 1e-10;

/// Weight of the first argument outside the support that still counts as
/// "inside".
pub const LEAKAGE_TOL: f64 = 1e-9;

/// `Some(L)` with `A = L L†` when `A ⪰ 0` is numerically rank deficient
/// (smallest eigenvalue below `1e-9` of the largest), `None` otherwise.
/// Columns are `√λ v` for every eigenvalue above `1e-15` of the largest.
pub(crate) fn support_factor(a: &CMatrix) -> Result<Option<CMatrix>> {
    let eig = herm_eig(a)?;
    let top = eig.max_eigenvalue().max(0.0);
    if eig.min_eigenvalue() >= 1e-9 * top && top > 0.0 {
        return Ok(None);
    }
    let keep: Vec<usize> = (0..eig.dim())
        .filter(|&j| eig.eigenvalues[j] > 1e-15 * top)
        .collect();
    let mut l = eig.eigenvectors.select_columns(&keep);
    for (col, &j) in keep.iter().enumerate() {
        let s = eig.eigenvalues[j].sqrt();
        l.column_mut(col).scale_mut(s);
    }
    Ok(Some(l))
}
