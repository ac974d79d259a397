use chansim::harness::{
    aep_trend, channel_concavity_gap, check_concavity_in_channel, check_input_convexity,
    check_restricted_minimax, input_convexity_gap, restricted_minimax, CONVEXITY_TOL, MINIMAX_TOL,
};
use chansim::optim::OptimizerConfig;
use chansim::quantum::{
    constant_channel, dephasing, depolarizing, identity_channel, random_channel, random_density,
    DensityOperator,
};
use chansim::Error;
use proptest::prelude::*;

#[test]
fn convexity_and_concavity_hold_on_1000_trials() {
    let n = dephasing(2, 0.5).unwrap();
    let a = check_input_convexity(&n, 1000, 11).unwrap();
    assert!(a.pass && a.worst_violation <= CONVEXITY_TOL, "{a:?}");
    assert_eq!(a.trials, 1000);
    let b = check_concavity_in_channel(&n, 1000, 12).unwrap();
    assert!(b.pass && b.worst_violation <= CONVEXITY_TOL, "{b:?}");
    let c = check_input_convexity(&depolarizing(2, 0.3).unwrap(), 200, 13).unwrap();
    assert!(c.pass);
}

#[test]
fn property_reports_are_reproducible() {
    let n = random_channel(2, 2, 3, 4).unwrap();
    let a = check_input_convexity(&n, 50, 5).unwrap();
    let b = check_input_convexity(&n, 50, 5).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    let cfg = OptimizerConfig {
        restarts: 2,
        ..Default::default()
    };
    let a = check_restricted_minimax(&n, 2, &cfg, 9).unwrap();
    let b = check_restricted_minimax(&n, 2, &cfg, 9).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
}

#[test]
fn zero_trials_is_rejected() {
    let n = identity_channel(2);
    assert!(matches!(check_input_convexity(&n, 0, 0), Err(Error::Parameter(_))));
    assert!(matches!(check_concavity_in_channel(&n, 0, 0), Err(Error::Parameter(_))));
    assert!(matches!(
        check_restricted_minimax(&n, 1, &OptimizerConfig::default(), 0),
        Err(Error::Parameter(_))
    ));
}

#[test]
fn perfect_simulation_gives_zero_gap() {
    let n = dephasing(2, 0.5).unwrap();
    let m = random_channel(2, 2, 2, 6).unwrap();
    let r0 = random_density(2, 2, 1).unwrap();
    let r1 = random_density(2, 1, 2).unwrap();
    assert!(input_convexity_gap(&n, &n, &r0, &r1, 0.3).unwrap().abs() < 1e-12);
    assert!(channel_concavity_gap(&n, &m, &m, &r0, 0.6).unwrap().abs() < 1e-12);
}

#[test]
fn minimax_with_identical_maps_has_no_gap() {
    let n = dephasing(2, 0.5).unwrap();
    let m = random_channel(2, 2, 3, 21).unwrap();
    let r = restricted_minimax(&n, &[m.clone(), m], &OptimizerConfig::default(), 0).unwrap();
    assert!(r.pass, "{r:?}");
    assert!(r.worst_violation < 1e-6);
}

#[test]
fn minimax_on_hull_containing_the_target_is_one() {
    let n = depolarizing(2, 0.3).unwrap();
    let m = random_channel(2, 2, 2, 2).unwrap();
    let r = restricted_minimax(&n, &[m, n.clone()], &OptimizerConfig::default(), 0).unwrap();
    assert!(r.pass, "{r:?}");
    assert!((r.details["sup_inf"] - 1.0).abs() < 1e-6);
    assert!((r.details["inf_sup"] - 1.0).abs() < 1e-6);
    // The value is quadratic in the weight near the optimum, so the weight
    // is only resolved to about the square root of the solver tolerance.
    assert!(r.details["weight_1"] > 1.0 - 1e-3, "{r:?}");
}

#[test]
fn minimax_on_three_random_maps() {
    let n = dephasing(2, 0.5).unwrap();
    let r = check_restricted_minimax(&n, 3, &OptimizerConfig::default(), 7).unwrap();
    assert!(r.pass, "{r:?}");
    assert!(r.worst_violation <= MINIMAX_TOL);
    let d = &r.details;
    assert!(d["sup_inf"] <= d["cross_value"] && d["cross_value"] <= d["inf_sup"]);
    assert!(d["grid_sup_at_rho"] <= d["sdp_inf_sup"] + 1e-6);
    assert!(d["search_inf_at_w"] >= d["sdp_sup_inf"] - 1e-6);
    let w: f64 = (0..3).map(|i| d[&format!("weight_{i}")]).sum();
    assert!((w - 1.0).abs() < 1e-9);
}

#[test]
fn aep_trend_for_constant_channel_is_flat_zero() {
    let tau = random_density(2, 2, 3).unwrap();
    let k = constant_channel(2, &tau).unwrap();
    let t = aep_trend(&k, &DensityOperator::maximally_mixed(2), 0.3, 2).unwrap();
    assert!(t.target.abs() < 1e-10);
    assert!(t.rates.iter().all(|(_, a)| a.abs() < 1e-6));
    assert!(t.monotone);
}

#[test]
fn aep_trend_approaches_mutual_information() {
    let half = DensityOperator::maximally_mixed(2);
    for (n, target) in [(identity_channel(2), 2.0), (dephasing(2, 1.0).unwrap(), 1.0)] {
        let t = aep_trend(&n, &half, 0.3, 3).unwrap();
        assert!((t.target - target).abs() < 1e-10);
        assert!(t.monotone, "{t:?}");
        assert_eq!(t.rates.iter().map(|r| r.0).collect::<Vec<_>>(), vec![1, 2, 3]);
        // Smoothing only removes weight, so every rate sits below the target.
        for w in t.rates.windows(2) {
            assert!(w[1].1 >= w[0].1 - 1e-6);
        }
        assert!(t.rates.iter().all(|(_, a)| *a <= target + 1e-6));
    }
}

#[test]
fn aep_trend_caps() {
    let half = DensityOperator::maximally_mixed(2);
    let n = identity_channel(2);
    assert!(matches!(aep_trend(&n, &half, 0.3, 4), Err(Error::Resource(_))));
    assert!(matches!(aep_trend(&n, &half, 0.3, 0), Err(Error::Parameter(_))));
    let big = identity_channel(3);
    let third = DensityOperator::maximally_mixed(3);
    assert!(matches!(aep_trend(&big, &third, 0.3, 2), Err(Error::Resource(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn gaps_vanish_at_endpoints(seed in 0u64..1000, lam in 0.0f64..1.0) {
        let n = random_channel(2, 2, 2, seed).unwrap();
        let m = random_channel(2, 2, 1 + (seed as usize % 4), seed + 1).unwrap();
        let r0 = random_density(2, 2, seed + 2).unwrap();
        let r1 = random_density(2, 2, seed + 3).unwrap();
        prop_assert!(input_convexity_gap(&n, &m, &r0, &r1, 0.0).unwrap().abs() < 1e-12);
        prop_assert!(input_convexity_gap(&n, &m, &r0, &r1, lam).unwrap() <= CONVEXITY_TOL);
        prop_assert!(channel_concavity_gap(&n, &m, &n, &r0, lam).unwrap() <= CONVEXITY_TOL);
    }
}
