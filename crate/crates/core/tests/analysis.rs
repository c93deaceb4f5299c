use approx::assert_abs_diff_eq;
use incentive_core::aggregative::{AggregativeGame, SocialTarget};
use incentive_core::analysis::*;
use incentive_core::dynamics::{run_coupled, AtomicSystem, RunConfig, StepSchedule, StrategyUpdateRule};
use incentive_core::par::Execution;
use incentive_core::routing::{self, EdgeTollSystem, NetworkSpec, RoutingNetwork};
use incentive_core::vecops::dist_inf;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn two_link() -> EdgeTollSystem {
    EdgeTollSystem::new(routing::two_link())
}

fn pd_game() -> AtomicSystem<AggregativeGame> {
    AtomicSystem(
        AggregativeGame::new(
            vec![2.0, 2.0, 2.0],
            DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 0.5, 1.0, 0.0, 1.0, 0.5, 1.0, 0.0]),
            0.5,
            SocialTarget::Tracking(vec![1.0, -2.0, 0.5]),
        )
        .unwrap(),
    )
}

fn from_m(rows: &[f64], zeta: Vec<f64>) -> AtomicSystem<AggregativeGame> {
    let n = zeta.len();
    AtomicSystem(AggregativeGame::from_m(DMatrix::from_row_slice(n, n, rows), SocialTarget::Tracking(zeta)).unwrap())
}

fn random_points(n: usize, dim: usize, scale: f64, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| (0..dim).map(|_| rng.gen_range(-scale..scale)).collect()).collect()
}

#[test]
fn certifies_aggregative_optimum() {
    let g = pd_game();
    let p = g.0.optimal_incentive().0;
    let report = verify_fixed_point_optimality(&g, &p, 1e-8).unwrap();
    assert!(report.passed, "{:?}", report.failures);
}

#[test]
fn certifies_two_link_optimum_and_rejects_perturbation() {
    let g = two_link();
    let report = verify_fixed_point_optimality(&g, &[0.5, 0.5], 1e-6).unwrap();
    assert!(report.passed, "{:?}", report.failures);
    assert_abs_diff_eq!(report.social_cost, 0.5, epsilon = 1e-9);

    // x*(0.6, 0.5) = (0.45, 0.55), so e − p = (−0.15, 0.05).
    let bad = verify_fixed_point_optimality(&g, &[0.6, 0.5], 1e-6).unwrap();
    assert!(!bad.externality_consistent && !bad.passed);
    assert_abs_diff_eq!(bad.externality_gap, 0.15, epsilon = 1e-6);
    assert!(bad.clone().into_result().is_err());
}

#[test]
fn ode_probe_from_fixed_point_and_origin() {
    let g = two_link();
    let config = OdeProbeConfig::new(0.01, 20.0, vec![vec![0.5, 0.5], vec![0.0, 0.0]]);
    let report = ode_probe_slow_dynamics(&g, &config).unwrap();
    assert!(report.trajectories[0].max_distance <= 10.0 * 0.01);
    assert!(report.trajectories[1].terminal_distance.unwrap() <= 1e-3);
    assert!(report.trajectories.iter().all(|t| t.tail_monotone && t.error.is_none()));
}

#[test]
fn ode_probe_aggregative_random_starts() {
    let g = pd_game();
    let starts = random_points(20, 3, 5.0, 11);
    let config = OdeProbeConfig::new(0.01, 60.0, starts);
    let report = ode_probe_slow_dynamics(&g, &config).unwrap();
    assert!(report.all_within(1e-4), "{}", report.max_terminal_distance());
    assert!(report
        .trajectories
        .iter()
        .flat_map(|t| &t.decrement_samples)
        .all(|(_, d)| *d <= 1e-12));
}

#[test]
fn euler_halving_is_first_order() {
    let g = two_link();
    let coarse = ode_probe_slow_dynamics(&g, &OdeProbeConfig::new(0.02, 4.0, vec![vec![2.0, 0.0]])).unwrap();
    let fine = ode_probe_slow_dynamics(&g, &OdeProbeConfig::new(0.01, 4.0, vec![vec![2.0, 0.0]])).unwrap();
    let (a, b) = (&coarse.trajectories[0], &fine.trajectories[0]);
    let error_estimate = dist_inf(&a.terminal, &b.terminal);
    let change = (a.terminal_distance.unwrap() - b.terminal_distance.unwrap()).abs();
    assert!(change <= 2.0 * error_estimate + 1e-15);
}

#[test]
fn ode_terminal_matches_coupled_run() {
    let g = pd_game();
    let ode = ode_probe_slow_dynamics(&g, &OdeProbeConfig::new(0.01, 40.0, vec![vec![0.0; 3]])).unwrap();
    let config = RunConfig::new(StepSchedule::new(0.55, 0.75, 1.0, 1.0, 2).unwrap(), StrategyUpdateRule::Equilibrium);
    let run = run_coupled(&g, &[0.0; 3], &[0.0; 3], &config).unwrap();
    assert!(dist_inf(&ode.trajectories[0].terminal, run.final_p()) <= 1e-3);
}

#[test]
fn cross_partials_follow_inverse_sign_pattern() {
    // Nonnegative M with negative off-diagonal inverse and y† ≤ 0.
    let m1 = from_m(&[1.0, 0.1, 1.0, 1.0], vec![-1.0, -2.0]);
    let samples = random_points(10, 2, 3.0, 5);
    let r = check_cross_partial_condition(&m1, &samples, 1e-12).unwrap();
    assert!(r.all_off_diagonal_positive && r.nonnegative.passed && r.passed, "{r:?}");

    let m2 = from_m(&[1.0, -0.1, -0.1, 1.0], vec![-1.0, -2.0]);
    let r = check_cross_partial_condition(&m2, &samples, 1e-12).unwrap();
    assert!(!r.all_off_diagonal_positive && !r.passed);

    let uncoupled = from_m(&[2.0, 0.0, 0.0, 3.0], vec![-1.0, -2.0]);
    let r = check_cross_partial_condition(&uncoupled, &samples, 1e-12).unwrap();
    assert!(r.samples.iter().all(|s| s.min_off_diagonal.abs() < 1e-6));
    assert!(!r.passed);
}

#[test]
fn aggregative_lyapunov_decreases() {
    let g = pd_game();
    let v = QuadraticForm::aggregative(&g.0).unwrap();
    let mut samples = random_points(200, 3, 10.0, 3);
    samples.push(v.center.clone());
    let r = check_lyapunov_condition(&g, &v, &samples, 1e-12).unwrap();
    assert!(r.passed, "{:?}", r.violations);
    let last = r.samples.last().unwrap();
    assert_abs_diff_eq!(last.decrement, 0.0, epsilon = 1e-12);
    for (s, p) in r.samples.iter().zip(&samples) {
        assert_abs_diff_eq!(s.decrement, g.0.lyapunov_decrement(p).unwrap(), epsilon = 1e-9 * (1.0 + s.value));
    }
}

#[test]
fn routing_lyapunov_decays_at_rate_two() {
    let net = routing::two_link();
    let v = QuadraticForm::routing(&net, 1e-10).unwrap();
    assert_eq!(v.center, vec![0.5, 0.5]);
    let samples: Vec<Vec<f64>> = random_points(50, 2, 0.3, 9)
        .into_iter()
        .map(|d| vec![0.5 + d[0], 0.5 + d[1]])
        .collect();
    let r = check_lyapunov_condition(&EdgeTollSystem::new(net), &v, &samples, 1e-12).unwrap();
    assert!(r.passed);
    assert!(r.max_decrement_plus_twice_value <= 1e-8, "{}", r.max_decrement_plus_twice_value);
}

#[test]
fn routing_lyapunov_needs_strict_latencies() {
    assert!(QuadraticForm::routing(&routing::pigou(), 1e-10).is_err());
}

#[test]
fn baseline_steps() {
    let g = two_link();
    let p = gradient_baseline_step(&g, &[0.3, 0.1], 1.0, GradientEstimator::FiniteDifference, 1e-12).unwrap();
    assert!(dist_inf(&p, &[0.1, 0.3]) <= 1e-6, "{p:?}");
    let p = gradient_baseline_step(&g, &[3.0, 0.0], 0.5, GradientEstimator::TwoLink, 1e-12).unwrap();
    assert_eq!(p.0, vec![3.0, 0.0]);
    let p = gradient_baseline_step(&g, &[0.7, 0.7], 1.0, GradientEstimator::FiniteDifference, 1e-12).unwrap();
    assert!(dist_inf(&p, &[0.7, 0.7]) <= 1e-8);
    assert_eq!(two_link_clarke_gradient(&[1.0, 0.0]).unwrap(), vec![0.0, 0.0]);
}

#[test]
fn finite_difference_matches_clarke_away_from_kink() {
    let g = two_link();
    for p in random_points(30, 2, 2.5, 21) {
        if ((p[0] - p[1]).abs() - 1.0).abs() < 1e-2 {
            continue;
        }
        let fd = equilibrium_cost_gradient(&g, &p, 1e-4 * (1.0 + p[0].hypot(p[1])), 1e-13).unwrap();
        let exact = two_link_clarke_gradient(&p).unwrap();
        for (a, b) in fd.iter().zip(&exact) {
            assert!((a - b).abs() <= 1e-5 * b.abs().max(1.0), "{p:?}: {fd:?} vs {exact:?}");
        }
    }
}

#[test]
fn counterexample_formulas() {
    assert_abs_diff_eq!(two_link_equilibrium_share([0.4, 0.0]), 0.3, epsilon = 1e-15);
    assert_abs_diff_eq!(two_link_equilibrium_cost([0.4, 0.0]), 0.58, epsilon = 1e-15);
    assert_eq!(two_link_equilibrium_share([1.5, 0.0]), 0.0);
    assert_eq!(two_link_equilibrium_cost([1.5, 0.0]), 1.0);
}

#[test]
fn counterexample_reproduces() {
    let report = reproduce_counterexample(&CounterexampleOptions::default()).unwrap();
    assert!(report.passed, "{report:#?}");
    assert_eq!(report.grid.len(), 41 * 41);
    let mut csv = Vec::new();
    report.write_grid_csv(&mut csv).unwrap();
    assert_eq!(String::from_utf8(csv).unwrap().lines().count(), 41 * 41 + 1);
}

#[test]
fn multistart_agrees_on_convex_instances() {
    let braess = EdgeTollSystem::new(routing::braess());
    let r = multistart_uniqueness_probe(&braess, &[0.1, 0.0, 0.2, 0.0, 0.3], 8, 1, 1e-12, Execution::Parallel).unwrap();
    assert!(r.max_pairwise_distance <= 1e-6 && !r.possible_violation);

    let g = pd_game();
    let r = multistart_uniqueness_probe(&g, &[1.0, 2.0, 3.0], 5, 2, 1e-12, Execution::Sequential).unwrap();
    assert_eq!(r.max_pairwise_distance, 0.0);
}

#[test]
fn multistart_flags_nonunique_route_flows() {
    // Two parallel constant-latency links: every split is an equilibrium.
    let spec: NetworkSpec = serde_json::from_str(
        r#"{"nodes": ["s", "t"],
            "edges": [{"tail": "s", "head": "t", "poly": [1]}, {"tail": "s", "head": "t", "poly": [1]}],
            "od": [{"o": "s", "d": "t", "demand": 1, "routes": [[0], [1]]}]}"#,
    )
    .unwrap();
    let net = RoutingNetwork::new(spec).unwrap();
    let r = multistart_uniqueness_probe(&EdgeTollSystem::new(net), &[0.0, 0.0], 6, 4, 1e-12, Execution::default()).unwrap();
    assert!(r.possible_violation, "{}", r.max_pairwise_distance);
}
