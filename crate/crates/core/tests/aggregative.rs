use incentive_core::aggregative::{AggregativeGame, ConvexTerm, SocialTarget};
use incentive_core::analysis::{check_cross_partial_condition, CROSS_PARTIAL_FLOOR};
use incentive_core::dynamics::{step_strategy, AtomicSystem, CoupledGame, StrategyUpdateRule};
use incentive_core::game::{certify_nash_atomic, optimality_residual_atomic, AtomicGame};
use incentive_core::vecops::dist_inf;
use nalgebra::DMatrix;
use proptest::prelude::*;

const N: usize = 4;

/// Games with `M` well inside the symmetric positive definite cone.
fn symmetric_game() -> impl Strategy<Value = AggregativeGame> {
    (
        proptest::collection::vec(1.5f64..3.0, N),
        proptest::collection::vec(-0.5f64..0.5, N * N),
        proptest::collection::vec(-2.0f64..2.0, N),
    )
        .prop_map(|(q, raw, zeta)| {
            let a = DMatrix::from_fn(N, N, |i, j| if i == j { 0.0 } else { raw[i.min(j) * N + i.max(j)] });
            AggregativeGame::new(q, a, 0.5, SocialTarget::Tracking(zeta)).unwrap()
        })
}

/// Separable targets mixing quadratic and quartic terms, general `A`.
fn separable_game() -> impl Strategy<Value = AggregativeGame> {
    (
        proptest::collection::vec(1.5f64..3.0, N),
        proptest::collection::vec(-0.6f64..0.6, N * N),
        proptest::collection::vec((-2.0f64..2.0, 0.1f64..2.0, any::<bool>()), N),
    )
        .prop_map(|(q, raw, terms)| {
            let a = DMatrix::from_fn(N, N, |i, j| if i == j { 0.0 } else { raw[i * N + j] });
            let h = terms
                .into_iter()
                .map(|(center, w, quartic)| {
                    if quartic {
                        ConvexTerm::Quartic { center, quartic: w, weight: 0.1 }
                    } else {
                        ConvexTerm::Quadratic { center, weight: w }
                    }
                })
                .collect();
            AggregativeGame::new(q, a, 0.5, SocialTarget::Separable(h)).unwrap()
        })
}

/// Nonnegative `M` with small positive coupling, whose inverse then has
/// negative off-diagonal entries; nonpositive targets.
fn cooperative_game() -> impl Strategy<Value = AggregativeGame> {
    (
        proptest::collection::vec(1.0f64..2.0, N),
        proptest::collection::vec(0.05f64..0.15, N * N),
        proptest::collection::vec(-2.0f64..-0.1, N),
    )
        .prop_map(|(q, raw, zeta)| {
            let a = DMatrix::from_fn(N, N, |i, j| if i == j { 0.0 } else { raw[i * N + j] });
            AggregativeGame::new(q, a, 0.5, SocialTarget::Tracking(zeta)).unwrap()
        })
}

fn random_incentive() -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-5.0f64..5.0, N)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn optimal_incentive_is_a_fixed_point(g in prop_oneof![symmetric_game(), separable_game()]) {
        let p = g.optimal_incentive();
        let x = g.nash_closed_form(&p).unwrap();
        let e = g.externality(&x).unwrap();
        prop_assert!(dist_inf(&e, &p) <= 1e-10 * (1.0 + p.iter().fold(0.0f64, |m, v| m.max(v.abs()))));
        prop_assert!(optimality_residual_atomic(&g, &x).unwrap() <= 1e-8);
    }

    #[test]
    fn closed_form_equilibria_certify(g in separable_game(), p in random_incentive()) {
        let x = g.nash_closed_form(&p).unwrap();
        prop_assert!(certify_nash_atomic(&g, &x, &p, 1e-8).unwrap().passed);
    }

    #[test]
    fn damped_best_response_reaches_closed_form(g in symmetric_game(), p in random_incentive()) {
        let system = AtomicSystem(g);
        let target = system.0.nash_closed_form(&p).unwrap();
        let mut x = vec![0.0; N];
        for _ in 0..2000 {
            x = step_strategy(&system, &x, &p, &StrategyUpdateRule::BestResponse, 0.3, 1e-12).unwrap();
        }
        prop_assert!(dist_inf(&x, &target) <= 1e-6);
    }

    #[test]
    fn lyapunov_decreases_under_global_conditions(g in symmetric_game(), ps in proptest::collection::vec(random_incentive(), 25)) {
        prop_assert!(g.check_global_conditions().passed);
        let opt = g.optimal_incentive();
        for p in ps {
            prop_assume!(dist_inf(&p, &opt) > 1e-6);
            prop_assert!(g.lyapunov_value(&p).unwrap() > 0.0);
            let d = g.lyapunov_decrement(&p).unwrap();
            let x = g.nash_closed_form(&p).unwrap();
            let target = g.target_point();
            let identity = -2.0 * x.iter().zip(target).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
            prop_assert!(d < 0.0);
            prop_assert!((d - identity).abs() <= 1e-8 * (1.0 + identity.abs()));
        }
    }

    #[test]
    fn cross_partials_positive_under_local_conditions(g in cooperative_game(), seed in 0u64..1000) {
        prop_assert!(g.check_local_conditions().passed);
        let samples: Vec<Vec<f64>> = (0..3)
            .map(|k| (0..N).map(|i| ((seed + 7 * k + i as u64) % 11) as f64 - 5.0).collect())
            .collect();
        let r = check_cross_partial_condition(&AtomicSystem(g), &samples, 1e-12).unwrap();
        prop_assert!(r.samples.iter().all(|s| s.min_off_diagonal > CROSS_PARTIAL_FLOOR));
        prop_assert!(r.nonnegative.passed);
    }

    #[test]
    fn json_round_trip(g in separable_game()) {
        let text = serde_json::to_string(&g).unwrap();
        let back: AggregativeGame = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back.optimal_incentive(), g.optimal_incentive());
        prop_assert_eq!(back.m(), g.m());
    }
}

#[test]
fn closed_form_is_generic_equilibrium() {
    // The closed form agrees with the generic extragradient solver.
    let g = AggregativeGame::new(
        vec![2.0, 2.5, 3.0],
        DMatrix::from_row_slice(3, 3, &[0.0, 0.4, -0.2, 0.4, 0.0, 0.3, -0.2, 0.3, 0.0]),
        0.5,
        SocialTarget::Tracking(vec![1.0, 0.0, -1.0]),
    )
    .unwrap();
    let p = [0.3, -0.7, 1.1];
    let generic = incentive_core::game::atomic::solve_nash_extragradient(&g, &p, &[0.0; 3], Default::default()).unwrap();
    assert!(dist_inf(&generic, &g.nash_closed_form(&p).unwrap()) <= 1e-8);
    assert_eq!(AtomicSystem(g.clone()).social_optimum(1e-10).unwrap(), g.target_point().to_vec());
    let _ = AtomicGame::n_players(&g);
}
