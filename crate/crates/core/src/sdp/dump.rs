use std::fmt::Write;

use super::problem::{Field, SdpProblem, SparseHermitian};

/// Plain-text rendering of a problem, for debugging solver failures.
///
/// Layout: a header line with the block count, one line per block
/// (`dim field`), then the objective and each constraint as lists of
/// `block row col re im` triplets.
pub fn dump_problem(p: &SdpProblem) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "blocks {}", p.blocks.len());
    for (n, f) in &p.blocks {
        let f = match f {
            Field::Real => "real",
            Field::Complex => "complex",
        };
        let _ = writeln!(out, "{n} {f}");
    }
    let write_terms = |out: &mut String, terms: &[(usize, &SparseHermitian)]| {
        for (k, a) in terms {
            for &(i, j, v) in &a.entries {
                let _ = writeln!(out, "  {k} {i} {j} {:e} {:e}", v.re, v.im);
            }
        }
    };
    let _ = writeln!(out, "objective");
    let obj: Vec<(usize, &SparseHermitian)> = p.objective.iter().enumerate().collect();
    write_terms(&mut out, &obj);
    for (idx, c) in p.constraints.iter().enumerate() {
        let _ = writeln!(out, "constraint {idx} rhs {:e}", c.rhs);
        let terms: Vec<(usize, &SparseHermitian)> = c.terms.iter().map(|(k, a)| (*k, a)).collect();
        write_terms(&mut out, &terms);
    }
    out
}
