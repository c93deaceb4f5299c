use approx::assert_abs_diff_eq;
use incentive_core::aggregative::{AggregativeGame, SocialTarget};
use incentive_core::game::fd::central_partial;
use incentive_core::game::*;
use incentive_core::routing;
use incentive_core::vecops::dist_inf;
use nalgebra::DMatrix;
use proptest::prelude::*;

fn swap_pair(zeta: Vec<f64>) -> AggregativeGame {
    AggregativeGame::new(
        vec![1.0, 1.0],
        DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]),
        0.5,
        SocialTarget::Tracking(zeta),
    )
    .unwrap()
}

fn two_links() -> AffinePopulationGame {
    AffinePopulationGame::new(PopulationLayout::new(&[(1.0, 2)]).unwrap(), DMatrix::identity(2, 2), vec![0.0; 2]).unwrap()
}

#[test]
fn aggregative_total_cost_and_externality() {
    let g = swap_pair(vec![0.0, 0.0]);
    assert_abs_diff_eq!(total_cost_atomic(&g, &[1.0, 2.0], &[0.1, 0.0], 0).unwrap(), 1.6, epsilon = 1e-15);
    let e = externality_atomic(&g, &[1.0, 1.0]).unwrap();
    assert_abs_diff_eq!(e[0], -0.5, epsilon = 1e-15);
    assert_abs_diff_eq!(e[1], -0.5, epsilon = 1e-15);
}

#[test]
fn two_link_costs() {
    let g = two_links();
    assert_eq!(total_cost_nonatomic(&g, &[0.5, 0.5], &[0.0, 0.0], 0, 0).unwrap(), 0.5);
    assert_eq!(total_cost_nonatomic(&g, &[1.0, 0.0], &[0.0, 0.0], 0, 1).unwrap(), 0.0);
    assert_eq!(total_cost_nonatomic(&g, &[0.5, 0.5], &[0.5, 0.5], 0, 1).unwrap(), 1.0);
    assert!(matches!(
        total_cost_nonatomic(&g, &[0.5, 0.5], &[0.0, 0.0], 0, 2),
        Err(incentive_core::Error::InvalidArgument(_))
    ));
}

#[test]
fn atomic_certification() {
    let g = swap_pair(vec![0.0, 0.0]);
    let c = certify_nash_atomic(&g, &[0.0, 0.0], &[0.0, 0.0], 1e-12).unwrap();
    assert!(c.passed && c.residual == 0.0);
    let x = [-2.0 / 3.0, -2.0 / 3.0];
    assert!(certify_nash_atomic(&g, &x, &[1.0, 1.0], 1e-12).unwrap().passed);
    let tol = CERTIFY_TOL;
    let bumped = [x[0] + 10.0 * tol, x[1]];
    assert!(!certify_nash_atomic(&g, &bumped, &[1.0, 1.0], tol).unwrap().passed);
}

#[test]
fn nonatomic_certification() {
    let g = two_links();
    assert!(certify_nash_nonatomic(&g, &[0.5, 0.5], &[0.0, 0.0], CERTIFY_TOL).unwrap().passed);
    assert!(certify_nash_nonatomic(&g, &[0.0, 1.0], &[2.0, 0.0], CERTIFY_TOL).unwrap().passed);
    assert!(!certify_nash_nonatomic(&g, &[0.7, 0.3], &[0.0, 0.0], CERTIFY_TOL).unwrap().passed);

    let singles = AffinePopulationGame::new(
        PopulationLayout::new(&[(1.0, 1), (2.0, 1)]).unwrap(),
        DMatrix::from_row_slice(2, 2, &[3.0, 1.0, 1.0, 5.0]),
        vec![1.0, -4.0],
    )
    .unwrap();
    assert!(certify_nash_nonatomic(&singles, &[1.0, 2.0], &[7.0, -3.0], 1e-12).unwrap().passed);
}

#[test]
fn social_optima() {
    let opts = SolverOptions::with_tol(1e-10);
    let g = swap_pair(vec![1.0, 2.0]);
    assert!(dist_inf(&AtomicGame::social_optimum(&g, opts).unwrap(), &[1.0, 2.0]) <= 1e-12);
    // The generic solver agrees with the closed form.
    assert!(dist_inf(&social_optimum_atomic(&g, opts).unwrap(), &[1.0, 2.0]) <= 1e-8);

    let links = two_links();
    let x = social_optimum_nonatomic(&links, opts).unwrap();
    assert!(dist_inf(&x, &[0.5, 0.5]) <= 1e-8);
    assert_abs_diff_eq!(links.social_cost(&x).unwrap(), 0.5, epsilon = 1e-12);

    let pigou = routing::pigou();
    let w = NonAtomicGame::social_optimum(&pigou, opts).unwrap();
    assert!(dist_inf(&w, &[0.5, 0.5]) <= 1e-6, "{w:?}");
    // Brute-force grid over w² + (1 − w).
    let best = (0..=1000)
        .map(|k| k as f64 / 1000.0)
        .min_by(|a, b| (a * a + 1.0 - a).total_cmp(&(b * b + 1.0 - b)))
        .unwrap();
    assert_abs_diff_eq!(best, 0.5);
}

fn affine_game(n: usize, entries: &[f64], offset: &[f64]) -> AffinePopulationGame {
    // B Bᵀ + I keeps the costs strongly monotone.
    let b = DMatrix::from_row_slice(n, n, &entries[..n * n]);
    let c = &b * b.transpose() + DMatrix::identity(n, n);
    AffinePopulationGame::new(PopulationLayout::new(&[(1.0, 2), (2.0, 2)]).unwrap(), c, offset[..n].to_vec()).unwrap()
}

fn aggregative(n: usize, entries: &[f64], q: &[f64], zeta: &[f64]) -> AggregativeGame {
    let a = DMatrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { entries[i * n + j] });
    AggregativeGame::new(q[..n].to_vec(), a, 0.3, SocialTarget::Tracking(zeta[..n].to_vec())).unwrap()
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-5 * a.abs().max(b.abs()).max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn atomic_externality_matches_finite_differences(
        entries in proptest::collection::vec(-1.0f64..1.0, 9),
        q in proptest::collection::vec(1.0f64..3.0, 3),
        zeta in proptest::collection::vec(-2.0f64..2.0, 3),
        x in proptest::collection::vec(-3.0f64..3.0, 3),
    ) {
        let g = aggregative(3, &entries, &q, &zeta);
        let e = externality_atomic(&g, &x).unwrap();
        for i in 0..3 {
            let dphi = central_partial(|y| g.social_cost(y), &x, i).unwrap();
            let dl = central_partial(|y| g.player_cost(y, i), &x, i).unwrap();
            prop_assert!(close(e[i], dphi - dl), "{} vs {}", e[i], dphi - dl);
        }
    }

    #[test]
    fn nonatomic_externality_matches_finite_differences(
        entries in proptest::collection::vec(-1.0f64..1.0, 16),
        offset in proptest::collection::vec(-1.0f64..1.0, 4),
        raw in proptest::collection::vec(0.0f64..1.0, 4),
    ) {
        let g = affine_game(4, &entries, &offset);
        let x = g.layout().project(&raw);
        let e = externality_nonatomic(&g, &x).unwrap();
        let costs = g.action_costs(&x).unwrap();
        for k in 0..4 {
            let dphi = central_partial(|y| g.social_cost(y), &x, k).unwrap();
            prop_assert!(close(e[k], dphi - costs[k]));
        }
    }

    #[test]
    fn solver_outputs_certify(
        entries in proptest::collection::vec(-1.0f64..1.0, 16),
        offset in proptest::collection::vec(-1.0f64..1.0, 4),
        p in proptest::collection::vec(-1.0f64..1.0, 4),
    ) {
        let g = affine_game(4, &entries, &offset);
        let opts = SolverOptions::with_tol(1e-9);
        let opt = g.social_optimum(opts).unwrap();
        prop_assert!(g.layout().is_feasible(&opt, MASS_TOL));
        prop_assert!(optimality_residual_nonatomic(&g, &opt).unwrap() <= 10.0 * opts.tol);
        let eq = g.nash_equilibrium(&p, &g.layout().uniform(), opts).unwrap();
        prop_assert!(g.layout().is_feasible(&eq, MASS_TOL));
        prop_assert!(nash_residual_nonatomic(&g, &eq, &p).unwrap() <= 10.0 * opts.tol);
        prop_assert!(certify_nash_nonatomic(&g, &eq, &p, CERTIFY_TOL).unwrap().passed);
    }

    #[test]
    fn projections_stay_feasible(raw in proptest::collection::vec(-5.0f64..5.0, 4)) {
        let layout = PopulationLayout::new(&[(1.0, 2), (2.0, 2)]).unwrap();
        let x = layout.project(&raw);
        prop_assert!(x.iter().all(|v| *v >= 0.0));
        prop_assert!((x[0] + x[1] - 1.0).abs() <= 1e-9 && (x[2] + x[3] - 2.0).abs() <= 1e-9);
    }
}
