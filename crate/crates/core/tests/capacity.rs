use chansim::capacity::{capacity_ce, mutual_info, renyi_channel_mutual_info, renyi_mi_product};
use chansim::divergences::sandwiched_renyi;
use chansim::linalg::{c, CMatrix};
use chansim::optim::OptimizerConfig;
use chansim::quantum::{
    constant_channel, dephasing, depolarizing, identity_channel, joint_output, random_channel,
    random_density, random_unitary, DensityOperator,
};
use chansim::Error;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn h(p: &[f64]) -> f64 {
    p.iter().filter(|&&x| x > 0.0).map(|&x| -x * x.log2()).sum()
}

fn bloch(x: f64, y: f64, z: f64) -> DensityOperator {
    DensityOperator::new(CMatrix::from_row_slice(
        2,
        2,
        &[c((1.0 + z) / 2.0, 0.0), c(x / 2.0, -y / 2.0), c(x / 2.0, y / 2.0), c((1.0 - z) / 2.0, 0.0)],
    ))
    .unwrap()
}

/// Largest `I(A':B)` over a grid of the Bloch ball.
fn bloch_grid_capacity(n: &chansim::quantum::QuantumChannel, steps: usize) -> f64 {
    let mut best = f64::NEG_INFINITY;
    for ir in 0..=steps {
        let r = ir as f64 / steps as f64;
        for it in 0..=steps {
            let th = std::f64::consts::PI * it as f64 / steps as f64;
            for ip in 0..(2 * steps) {
                let ph = std::f64::consts::PI * ip as f64 / steps as f64;
                let rho = bloch(r * th.sin() * ph.cos(), r * th.sin() * ph.sin(), r * th.cos());
                best = best.max(mutual_info(n, &rho).unwrap());
            }
        }
    }
    best
}

#[test]
fn mutual_info_examples() {
    let half = DensityOperator::maximally_mixed(2);
    assert!((mutual_info(&identity_channel(2), &half).unwrap() - 2.0).abs() < 1e-10);
    let tau = random_density(2, 2, 1).unwrap();
    let k = constant_channel(2, &tau).unwrap();
    assert!(mutual_info(&k, &random_density(2, 2, 2).unwrap()).unwrap().abs() < 1e-10);
    for p in [0.1, 0.3, 0.8] {
        let expected = 2.0 - h(&[1.0 - 0.75 * p, p / 4.0, p / 4.0, p / 4.0]);
        let got = mutual_info(&depolarizing(2, p).unwrap(), &half).unwrap();
        assert!((got - expected).abs() < 1e-10, "p={p}");
    }
    assert!(mutual_info(&identity_channel(3), &half).is_err());
}

#[test]
fn capacity_known_values() {
    let cfg = OptimizerConfig::default();
    let id = capacity_ce(&identity_channel(2), &cfg).unwrap();
    assert!((id.value - 2.0).abs() < 1e-6);
    assert!((bloch_grid_capacity(&identity_channel(2), 12) - 2.0).abs() < 1e-9);
    let full = depolarizing(2, 1.0).unwrap();
    assert!(capacity_ce(&full, &cfg).unwrap().value.abs() < 1e-9);
    let deph = dephasing(2, 1.0).unwrap();
    let grid = bloch_grid_capacity(&deph, 12);
    let v = capacity_ce(&deph, &cfg).unwrap();
    assert!(v.converged);
    assert!((v.value - 1.0).abs() < 1e-6);
    assert!(v.value >= grid - 1e-9);
    assert!((grid - 1.0).abs() < 1e-3);
}

#[test]
fn capacity_of_depolarizing_matches_bloch_grid() {
    let n = depolarizing(2, 0.3).unwrap();
    let v = capacity_ce(&n, &OptimizerConfig::default()).unwrap();
    let grid = bloch_grid_capacity(&n, 10);
    assert!((v.value - grid).abs() < 1e-3);
    assert!(v.value >= grid - 1e-9);
    // Covariance: the optimizer is as good as the maximally mixed input.
    let mm = mutual_info(&n, &DensityOperator::maximally_mixed(2)).unwrap();
    assert!((mutual_info(&n, &v.optimizer_state).unwrap() - mm).abs() < 1e-6);
}

#[test]
fn capacity_dominates_restart_points_and_is_unitarily_invariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let cfg = OptimizerConfig::default();
    for seed in 0..4 {
        let n = random_channel(2, 2, 2, seed).unwrap();
        let v = capacity_ce(&n, &cfg).unwrap();
        assert!(v.converged);
        let mm = mutual_info(&n, &DensityOperator::maximally_mixed(2)).unwrap();
        assert!(v.value >= mm - 1e-9);
        assert!((mutual_info(&n, &v.optimizer_state).unwrap() - v.value).abs() < 1e-9);
        let u = random_unitary(&mut rng, 2);
        let w = random_unitary(&mut rng, 2);
        let conj = n.conjugated(&u, &w);
        assert!((capacity_ce(&conj, &cfg).unwrap().value - v.value).abs() < 1e-6);
    }
}

#[test]
fn capacity_is_deterministic() {
    let n = random_channel(2, 3, 3, 5).unwrap();
    let cfg = OptimizerConfig::default();
    let a = capacity_ce(&n, &cfg).unwrap();
    let b = capacity_ce(&n, &cfg).unwrap();
    assert_eq!(a.value.to_bits(), b.value.to_bits());
}

/// Two-level grid for the depolarizing channel: by covariance the input may
/// be taken diagonal with eigenvalues `(1±r)/2`, and the joint output is then
/// invariant under conjugate diagonal phases, so by convexity the optimal `σ`
/// is diagonal too.
fn depolarizing_renyi_grid(p: f64, alpha: f64) -> f64 {
    let n = depolarizing(2, p).unwrap();
    let mut best = f64::NEG_INFINITY;
    for ir in 0..=100 {
        let r = ir as f64 / 100.0;
        let rho = DensityOperator::from_diagonal(&[(1.0 + r) / 2.0, (1.0 - r) / 2.0]).unwrap();
        let joint = joint_output(&n, &rho).unwrap();
        let mut inner = f64::INFINITY;
        for iz in 1..2000 {
            let z = -1.0 + iz as f64 / 1000.0;
            let sigma = DensityOperator::from_diagonal(&[(1.0 + z) / 2.0, (1.0 - z) / 2.0]).unwrap();
            inner = inner.min(sandwiched_renyi(&joint, &rho.tensor(&sigma), alpha).unwrap());
        }
        best = best.max(inner);
    }
    best
}

#[test]
fn renyi_known_values() {
    let cfg = OptimizerConfig::default();
    let tau = random_density(2, 2, 4).unwrap();
    let k = constant_channel(2, &tau).unwrap();
    assert!(renyi_channel_mutual_info(&k, 1.5, &cfg).unwrap().value.abs() < 1e-7);
    for alpha in [1.5, 2.0, 5.0] {
        let v = renyi_channel_mutual_info(&identity_channel(2), alpha, &cfg).unwrap();
        assert!((v.value - 2.0).abs() < 1e-6, "α={alpha}");
    }
    let v = renyi_channel_mutual_info(&depolarizing(2, 0.3).unwrap(), 1.5, &cfg).unwrap();
    let grid = depolarizing_renyi_grid(0.3, 1.5);
    assert!((v.value - grid).abs() < 1e-3, "{} vs {grid}", v.value);
    assert!(matches!(renyi_channel_mutual_info(&k, 1.0, &cfg), Err(Error::Parameter(_))));
}

#[test]
fn renyi_ordering_on_random_channels() {
    let cfg = OptimizerConfig {
        restarts: 2,
        ..Default::default()
    };
    for seed in 20..22 {
        let n = random_channel(2, 2, 2, seed).unwrap();
        let ce = capacity_ce(&n, &cfg).unwrap().value;
        let mut last = ce - 1e-4;
        for alpha in [1.2, 2.0, 5.0] {
            let v = renyi_channel_mutual_info(&n, alpha, &cfg).unwrap();
            assert!(v.converged);
            assert!(v.value >= last - 1e-4, "seed={seed} α={alpha}");
            assert!(v.value >= mutual_info(&n, &v.optimizer_state).unwrap() - 1e-6);
            last = v.value;
        }
    }
}

#[test]
fn renyi_product_values_and_cap() {
    let cfg = OptimizerConfig {
        restarts: 1,
        ..Default::default()
    };
    let tau = random_density(2, 2, 4).unwrap();
    let k = constant_channel(2, &tau).unwrap();
    assert!(renyi_mi_product(&k, 1.5, 2, &cfg).unwrap().abs() < 1e-6);
    let v = renyi_mi_product(&identity_channel(2), 2.0, 2, &cfg).unwrap();
    assert!((v - 4.0).abs() < 1e-6);
    assert!(matches!(
        renyi_mi_product(&identity_channel(3), 2.0, 2, &cfg),
        Err(Error::Resource(_))
    ));
    assert!(renyi_mi_product(&identity_channel(2), 2.0, 3, &cfg).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn mutual_info_is_concave_and_bounded(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = chansim::quantum::random_channel_with(&mut rng, 2, 3, 3).unwrap();
        for _ in 0..25 {
            let r0 = chansim::quantum::random_density_with(&mut rng, 2, 2).unwrap();
            let r1 = chansim::quantum::random_density_with(&mut rng, 2, 1).unwrap();
            let lam: f64 = rand::Rng::random_range(&mut rng, 0.0..1.0);
            let mid = r0.mix(&r1, lam).unwrap();
            let lhs = mutual_info(&n, &mid).unwrap();
            let rhs = (1.0 - lam) * mutual_info(&n, &r0).unwrap() + lam * mutual_info(&n, &r1).unwrap();
            prop_assert!(lhs >= rhs - 1e-8);
            prop_assert!(lhs >= -1e-10 && lhs <= 2.0 + 1e-10);
        }
    }
}
