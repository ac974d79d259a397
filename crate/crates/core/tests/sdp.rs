use chansim::linalg::{c, herm_eig, sqrt_psd, CMatrix, C64, ONE};
use chansim::sdp::{solve, Field, LinearEntry, SdpProblem, SdpStatus, SdpTolerances};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_hermitian(rng: &mut ChaCha8Rng, d: usize, real_only: bool) -> CMatrix {
    let g = CMatrix::from_fn(d, d, |_, _| {
        let im = if real_only { 0.0 } else { rng.random_range(-1.0..1.0) };
        c(rng.random_range(-1.0..1.0), im)
    });
    (&g + g.adjoint()) * c(0.5, 0.0)
}

fn random_density(rng: &mut ChaCha8Rng, d: usize) -> CMatrix {
    let g = CMatrix::from_fn(d, d, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    let m = &g * g.adjoint();
    let t = m.trace();
    m / t
}

/// max ⟨H, X⟩ s.t. tr X = 1, X ⪰ 0, written as a minimization of ⟨−H, X⟩.
fn lambda_max_problem(h: &CMatrix, field: Field) -> SdpProblem {
    let d = h.nrows();
    let mut p = SdpProblem::new();
    let k = p.add_block(d, field);
    for i in 0..d {
        for j in i..d {
            // ⟨H, X⟩ = Σ_ii H_ii X_ii + Σ_{i<j} 2 Re(H_ji X_ij)
            let coef = if i == j { -h[(i, i)] } else { -h[(j, i)] * 2.0 };
            p.add_objective(LinearEntry::new(k, i, j, coef));
        }
    }
    let tr: Vec<LinearEntry> = (0..d).map(|i| LinearEntry::new(k, i, i, ONE)).collect();
    p.add_real_equality(&tr, 1.0);
    p
}

fn textbook_root_fidelity(rho: &CMatrix, sigma: &CMatrix) -> f64 {
    let s = sqrt_psd(rho).unwrap();
    let inner = &s * sigma * &s;
    let e = herm_eig(&inner).unwrap();
    e.eigenvalues.iter().map(|l| l.max(0.0).sqrt()).sum()
}

#[test]
fn trace_with_fixed_corner() {
    let mut p = SdpProblem::new();
    let k = p.add_block(3, Field::Complex);
    for i in 0..3 {
        p.add_objective(LinearEntry::new(k, i, i, ONE));
    }
    p.add_real_equality(&[LinearEntry::new(k, 0, 0, ONE)], 1.0);
    let sol = solve(&p, &SdpTolerances::default()).unwrap();
    assert_eq!(sol.status, SdpStatus::Optimal);
    assert!((sol.primal_objective - 1.0).abs() < 1e-7);
    assert!((sol.dual_objective - 1.0).abs() < 1e-7);
    assert!((sol.primal[0][(0, 0)].re - 1.0).abs() < 1e-7);
}

#[test]
fn largest_eigenvalue_matches_eig() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for d in [2, 3, 5] {
        let h = random_hermitian(&mut rng, d, false);
        let sol = solve(&lambda_max_problem(&h, Field::Complex), &SdpTolerances::default()).unwrap();
        assert_eq!(sol.status, SdpStatus::Optimal);
        let expected = herm_eig(&h).unwrap().max_eigenvalue();
        assert!((-sol.primal_objective - expected).abs() < 1e-7, "d={d}");
        // tr X = 1 has multiplier −λ_max.
        assert!((sol.dual[0] + expected).abs() < 1e-6);
    }
}

#[test]
fn root_fidelity_block_sdp() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for d in [2, 3] {
        let rho = random_density(&mut rng, d);
        let sigma = random_density(&mut rng, d);
        let mut p = SdpProblem::new();
        let k = p.add_block(2 * d, Field::Complex);
        for i in 0..d {
            p.add_objective(LinearEntry::new(k, i, d + i, c(-1.0, 0.0)));
            for j in i..d {
                p.add_complex_equality(&[LinearEntry::new(k, i, j, ONE)], rho[(i, j)]);
                p.add_complex_equality(&[LinearEntry::new(k, d + i, d + j, ONE)], sigma[(i, j)]);
            }
        }
        let sol = solve(&p, &SdpTolerances::default()).unwrap();
        assert_eq!(sol.status, SdpStatus::Optimal);
        let expected = textbook_root_fidelity(&rho, &sigma);
        assert!((-sol.primal_objective - expected).abs() < 1e-7, "d={d}");
    }
}

#[test]
fn detects_infeasibility() {
    let mut p = SdpProblem::new();
    let k = p.add_block(2, Field::Real);
    p.add_objective(LinearEntry::new(k, 0, 0, ONE));
    p.add_real_equality(&[LinearEntry::new(k, 0, 0, ONE), LinearEntry::new(k, 1, 1, ONE)], -1.0);
    let sol = solve(&p, &SdpTolerances::default()).unwrap();
    assert_eq!(sol.status, SdpStatus::Infeasible);
}

#[test]
fn detects_unboundedness() {
    let mut p = SdpProblem::new();
    let k = p.add_block(2, Field::Real);
    p.add_objective(LinearEntry::new(k, 0, 0, c(-1.0, 0.0)));
    p.add_real_equality(&[LinearEntry::new(k, 1, 1, ONE)], 1.0);
    let sol = solve(&p, &SdpTolerances::default()).unwrap();
    assert_eq!(sol.status, SdpStatus::Unbounded);
}

#[test]
fn empty_constraint_with_nonzero_rhs_is_infeasible() {
    let mut p = SdpProblem::new();
    let k = p.add_block(1, Field::Real);
    p.add_objective(LinearEntry::new(k, 0, 0, ONE));
    p.add_real_equality(&[], 1.0);
    let sol = solve(&p, &SdpTolerances::default()).unwrap();
    assert_eq!(sol.status, SdpStatus::Infeasible);
}

#[test]
fn rejects_problem_without_constraints() {
    let mut p = SdpProblem::new();
    p.add_block(2, Field::Real);
    assert!(solve(&p, &SdpTolerances::default()).is_err());
}

#[test]
fn solves_are_bitwise_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let h = random_hermitian(&mut rng, 4, false);
    let p = lambda_max_problem(&h, Field::Complex);
    let a = solve(&p, &SdpTolerances::default()).unwrap();
    let b = solve(&p, &SdpTolerances::default()).unwrap();
    assert_eq!(a.primal_objective.to_bits(), b.primal_objective.to_bits());
    assert_eq!(a.iterations, b.iterations);
    for (x, y) in a.primal.iter().zip(&b.primal) {
        assert!(x.iter().zip(y.iter()).all(|(u, v)| u == v));
    }
}

#[test]
fn real_and_complex_blocks_agree_on_real_data() {
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    for _ in 0..50 {
        let d = rng.random_range(2..6);
        let h = random_hermitian(&mut rng, d, true);
        let a = solve(&lambda_max_problem(&h, Field::Real), &SdpTolerances::default()).unwrap();
        let b = solve(&lambda_max_problem(&h, Field::Complex), &SdpTolerances::default()).unwrap();
        assert_eq!(a.status, SdpStatus::Optimal);
        assert_eq!(b.status, SdpStatus::Optimal);
        assert!((a.primal_objective - b.primal_objective).abs() < 1e-7);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn optimal_solutions_are_feasible_and_dual_bounded(seed in any::<u64>(), d in 2usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = random_hermitian(&mut rng, d, false);
        let p = lambda_max_problem(&h, Field::Complex);
        let sol = solve(&p, &SdpTolerances::default()).unwrap();
        prop_assert_eq!(sol.status, SdpStatus::Optimal);
        // Weak duality, with slack for the stopping tolerance.
        prop_assert!(sol.dual_objective <= sol.primal_objective + 1e-7);
        prop_assert!(p.max_residual(&sol.primal) < 1e-7);
        let eig = herm_eig(&sol.primal[0]).unwrap();
        prop_assert!(eig.min_eigenvalue() > -1e-9);
        let _: C64 = sol.primal[0][(0, 0)];
    }
}
