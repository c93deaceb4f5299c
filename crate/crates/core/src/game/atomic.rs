//! Atomic games: finitely many players with scalar interval strategies.

use crate::{vecops, Error, Result};

use super::{fd, finite, finite_vec, Certificate, IncentiveVector, Interval, SolverOptions, StrategyProfile};

/// Oracle access to an atomic game.
///
/// Only the own-strategy partial `∂ℓ_i/∂x_i` of each player's cost enters the
/// externality and the Nash conditions, so that is what the oracle exposes.
/// The provided methods fall back to central differences and to generic
/// solvers; implementors with closed forms should override them.
pub trait AtomicGame: Sync {
    fn n_players(&self) -> usize;

    fn bounds(&self, i: usize) -> Interval;

    /// Base cost `ℓ_i(x)` of player `i`, excluding payments.
    fn player_cost(&self, x: &[f64], i: usize) -> Result<f64>;

    fn player_cost_partial(&self, x: &[f64], i: usize) -> Result<f64> {
        fd::central_partial(|y| self.player_cost(y, i), x, i)
    }

    fn social_cost(&self, x: &[f64]) -> Result<f64>;

    fn social_cost_gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        fd::central_gradient(|y| self.social_cost(y), x)
    }

    /// Nash equilibrium `x*(p)`, warm-started from `warm`.
    fn nash_equilibrium(&self, p: &[f64], warm: &[f64], opts: SolverOptions) -> Result<Vec<f64>> {
        solve_nash_extragradient(self, p, warm, opts)
    }

    /// `argmin_y c_i(y, x_{-i}, p)` over player `i`'s interval.
    fn best_response(&self, x: &[f64], p: &[f64], i: usize, tol: f64) -> Result<f64> {
        best_response_bisection(self, x, p, i, tol)
    }

    /// Minimiser of the social cost over the strategy box.
    fn social_optimum(&self, opts: SolverOptions) -> Result<Vec<f64>> {
        social_optimum_atomic(self, opts).map(StrategyProfile::into_inner)
    }

    /// Lipschitz constant of the game map `x ↦ (∂ℓ_i/∂x_i)_i` near `x`.
    fn game_lipschitz(&self, x: &[f64]) -> Result<f64> {
        fd::lipschitz_estimate(|y| marginal_costs(self, y), x)
    }
}

pub fn project<G: AtomicGame + ?Sized>(game: &G, x: &[f64]) -> Vec<f64> {
    x.iter()
        .enumerate()
        .map(|(i, v)| game.bounds(i).project(*v))
        .collect()
}

pub fn is_feasible<G: AtomicGame + ?Sized>(game: &G, x: &[f64], tol: f64) -> bool {
    x.len() == game.n_players()
        && x.iter()
            .enumerate()
            .all(|(i, v)| game.bounds(i).contains(*v, tol))
}

fn check_dims<G: AtomicGame + ?Sized>(game: &G, x: &[f64], p: Option<&[f64]>) -> Result<()> {
    let n = game.n_players();
    if x.len() != n {
        return Err(Error::invalid_argument(format!(
            "strategy profile has length {}, expected {n}",
            x.len()
        )));
    }
    if let Some(p) = p {
        if p.len() != n {
            return Err(Error::invalid_argument(format!(
                "incentive vector has length {}, expected {n}",
                p.len()
            )));
        }
    }
    Ok(())
}

/// `ℓ_i(x) + p_i x_i`.
pub fn total_cost_atomic<G: AtomicGame + ?Sized>(
    game: &G,
    x: &[f64],
    p: &[f64],
    i: usize,
) -> Result<f64> {
    check_dims(game, x, Some(p))?;
    if i >= game.n_players() {
        return Err(Error::invalid_argument(format!("no player {i}")));
    }
    Ok(game.player_cost(x, i)? + p[i] * x[i])
}

/// `(∂ℓ_i/∂x_i)_i`.
pub fn marginal_costs<G: AtomicGame + ?Sized>(game: &G, x: &[f64]) -> Result<Vec<f64>> {
    (0..game.n_players())
        .map(|i| {
            game.player_cost_partial(x, i)
                .and_then(|v| finite(v, || format!("cost partial of player {i}")))
        })
        .collect()
}

/// Externality `e_i(x) = ∂Φ/∂x_i − ∂ℓ_i/∂x_i`.
pub fn externality_atomic<G: AtomicGame + ?Sized>(game: &G, x: &[f64]) -> Result<IncentiveVector> {
    check_dims(game, x, None)?;
    let grad = finite_vec(game.social_cost_gradient(x)?, || "social cost gradient".into())?;
    let own = marginal_costs(game, x)?;
    Ok(IncentiveVector(grad.iter().zip(&own).map(|(g, o)| g - o).collect()))
}

/// Max over players of `|x_i − Proj_{X_i}(x_i − (∂ℓ_i/∂x_i + p_i))|`.
pub fn nash_residual_atomic<G: AtomicGame + ?Sized>(game: &G, x: &[f64], p: &[f64]) -> Result<f64> {
    check_dims(game, x, Some(p))?;
    let own = marginal_costs(game, x)?;
    Ok((0..x.len()).fold(0.0, |m, i| {
        let stepped = game.bounds(i).project(x[i] - (own[i] + p[i]));
        m.max((x[i] - stepped).abs())
    }))
}

/// Variational-inequality certificate for a Nash equilibrium under payments `p`.
pub fn certify_nash_atomic<G: AtomicGame + ?Sized>(
    game: &G,
    x: &[f64],
    p: &[f64],
    tol: f64,
) -> Result<Certificate> {
    Ok(Certificate::from_residual(nash_residual_atomic(game, x, p)?, tol))
}

/// Projected-gradient residual of the social cost at `x`.
pub fn optimality_residual_atomic<G: AtomicGame + ?Sized>(game: &G, x: &[f64]) -> Result<f64> {
    check_dims(game, x, None)?;
    let g = finite_vec(game.social_cost_gradient(x)?, || "social cost gradient".into())?;
    Ok((0..x.len()).fold(0.0, |m, i| {
        m.max((x[i] - game.bounds(i).project(x[i] - g[i])).abs())
    }))
}

/// Minimises the social cost over the strategy box by projected gradient
/// descent with backtracking.
pub fn social_optimum_atomic<G: AtomicGame + ?Sized>(
    game: &G,
    opts: SolverOptions,
) -> Result<StrategyProfile> {
    let start = project(game, &vec![0.0; game.n_players()]);
    let bounds: Vec<Interval> = (0..game.n_players()).map(|i| game.bounds(i)).collect();
    projected_descent(
        |x| game.social_cost(x),
        |x| game.social_cost_gradient(x),
        |v| v.iter().zip(&bounds).map(|(x, b)| b.project(*x)).collect(),
        start,
        opts,
        "social optimum (projected gradient)",
    )
    .map(StrategyProfile)
}

/// Projected gradient descent with Armijo-type backtracking on the quadratic
/// upper model. Stops when `‖x − P(x − ∇f)‖∞ ≤ tol`.
pub(crate) fn projected_descent<F, G, P>(
    f: F,
    grad: G,
    proj: P,
    start: Vec<f64>,
    opts: SolverOptions,
    context: &str,
) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<f64>,
    G: Fn(&[f64]) -> Result<Vec<f64>>,
    P: Fn(&[f64]) -> Vec<f64>,
{
    let mut x = start;
    let mut fx = finite(f(&x)?, || format!("{context}: objective"))?;
    let mut g = finite_vec(grad(&x)?, || format!("{context}: gradient"))?;
    let mut step = 1.0;
    let mut best = (f64::INFINITY, x.clone());
    for _ in 0..opts.max_iterations {
        let unit: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a - b).collect();
        let residual = vecops::dist_inf(&x, &proj(&unit));
        if residual < best.0 {
            best = (residual, x.clone());
        }
        if residual <= opts.tol {
            return Ok(x);
        }
        // Accept once the step is below the local inverse Lipschitz constant
        // of the gradient. Near the optimum objective differences drown in
        // round-off, so the decrease test only guards against gross ascent.
        let slack = 1e-12 * (1.0 + fx.abs());
        let mut accepted = false;
        for _ in 0..80 {
            let trial: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a - step * b).collect();
            let y = proj(&trial);
            let d: Vec<f64> = y.iter().zip(&x).map(|(a, b)| a - b).collect();
            let fy = f(&y)?;
            if fy.is_finite() && fy <= fx + slack {
                let gy = finite_vec(grad(&y)?, || format!("{context}: gradient"))?;
                if step * vecops::dist2(&gy, &g) <= vecops::norm2(&d) {
                    x = y;
                    fx = fy;
                    g = gy;
                    accepted = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
        step = (step * 2.0).min(1e6);
    }
    Err(Error::ConvergenceFailure {
        context: context.into(),
        iterations: opts.max_iterations,
        residual: best.0,
        best: best.1,
    })
}

/// Extragradient iteration on the variational inequality of the game map
/// `F(x) + p` over a convex set, with the step shrunk until
/// `η‖F(y) − F(x)‖ ≤ 0.9‖y − x‖`.
pub(crate) fn extragradient<F, P>(
    map: F,
    proj: P,
    start: Vec<f64>,
    opts: SolverOptions,
    context: &str,
) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
    P: Fn(&[f64]) -> Vec<f64>,
{
    let mut x = proj(&start);
    let mut eta = 1.0;
    let mut best = (f64::INFINITY, x.clone());
    for _ in 0..opts.max_iterations {
        let fx = finite_vec(map(&x)?, || format!("{context}: game map"))?;
        let unit: Vec<f64> = x.iter().zip(&fx).map(|(a, b)| a - b).collect();
        let residual = vecops::dist_inf(&x, &proj(&unit));
        if residual < best.0 {
            best = (residual, x.clone());
        }
        if residual <= opts.tol {
            return Ok(x);
        }
        loop {
            let trial: Vec<f64> = x.iter().zip(&fx).map(|(a, b)| a - eta * b).collect();
            let y = proj(&trial);
            let fy = finite_vec(map(&y)?, || format!("{context}: game map"))?;
            let lhs = eta * vecops::dist2(&fy, &fx);
            let rhs = 0.9 * vecops::dist2(&y, &x);
            if lhs <= rhs || eta < 1e-14 {
                let next: Vec<f64> = x.iter().zip(&fy).map(|(a, b)| a - eta * b).collect();
                x = proj(&next);
                eta *= 1.2;
                break;
            }
            eta *= 0.5;
        }
    }
    Err(Error::ConvergenceFailure {
        context: context.into(),
        iterations: opts.max_iterations,
        residual: best.0,
        best: best.1,
    })
}

pub fn solve_nash_extragradient<G: AtomicGame + ?Sized>(
    game: &G,
    p: &[f64],
    warm: &[f64],
    opts: SolverOptions,
) -> Result<Vec<f64>> {
    check_dims(game, warm, Some(p))?;
    extragradient(
        |x| {
            let mut f = marginal_costs(game, x)?;
            f.iter_mut().zip(p).for_each(|(a, b)| *a += b);
            Ok(f)
        },
        |v| project(game, v),
        warm.to_vec(),
        opts,
        "atomic Nash equilibrium (extragradient)",
    )
}

/// Best response of player `i` by bisection on its marginal total cost,
/// which is nondecreasing when the cost is convex in the own strategy.
pub fn best_response_bisection<G: AtomicGame + ?Sized>(
    game: &G,
    x: &[f64],
    p: &[f64],
    i: usize,
    tol: f64,
) -> Result<f64> {
    check_dims(game, x, Some(p))?;
    let bounds = game.bounds(i);
    let mut y = x.to_vec();
    let mut slope = |v: f64| -> Result<f64> {
        y[i] = v;
        let d = game.player_cost_partial(&y, i)? + p[i];
        finite(d, || format!("cost partial of player {i}"))
    };
    if bounds.lower.is_finite() && slope(bounds.lower)? >= 0.0 {
        return Ok(bounds.lower);
    }
    if bounds.upper.is_finite() && slope(bounds.upper)? <= 0.0 {
        return Ok(bounds.upper);
    }
    let start = bounds.project(x[i]);
    let (mut lo, mut hi) = if slope(start)? < 0.0 {
        let mut width = 1.0;
        let mut hi = bounds.project(start + width);
        while slope(hi)? < 0.0 {
            width *= 2.0;
            if width > 1e15 {
                return Err(Error::ConvergenceFailure {
                    context: format!("best response of player {i}: no upper bracket"),
                    iterations: 50,
                    residual: f64::INFINITY,
                    best: vec![hi],
                });
            }
            hi = bounds.project(start + width);
        }
        (start, hi)
    } else {
        let mut width = 1.0;
        let mut lo = bounds.project(start - width);
        while slope(lo)? > 0.0 {
            width *= 2.0;
            if width > 1e15 {
                return Err(Error::ConvergenceFailure {
                    context: format!("best response of player {i}: no lower bracket"),
                    iterations: 50,
                    residual: f64::INFINITY,
                    best: vec![lo],
                });
            }
            lo = bounds.project(start - width);
        }
        (lo, start)
    };
    for _ in 0..200 {
        if hi - lo <= tol * (1.0 + lo.abs().max(hi.abs())) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if slope(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

type CostFn = dyn Fn(&[f64], usize) -> f64 + Send + Sync;
type PartialFn = dyn Fn(&[f64], usize) -> f64 + Send + Sync;
type SocialFn = dyn Fn(&[f64]) -> f64 + Send + Sync;
type SocialGradFn = dyn Fn(&[f64]) -> Vec<f64> + Send + Sync;

/// Atomic game assembled from closures. Gradients are optional; missing ones
/// fall back to central differences.
pub struct FnAtomicGame {
    bounds: Vec<Interval>,
    cost: Box<CostFn>,
    cost_partial: Option<Box<PartialFn>>,
    social: Box<SocialFn>,
    social_grad: Option<Box<SocialGradFn>>,
}

impl FnAtomicGame {
    pub fn new(
        bounds: Vec<Interval>,
        cost: impl Fn(&[f64], usize) -> f64 + Send + Sync + 'static,
        social: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        if bounds.is_empty() {
            return Err(Error::invalid_spec("an atomic game needs at least one player"));
        }
        for b in &bounds {
            Interval::new(b.lower, b.upper)?;
        }
        Ok(FnAtomicGame {
            bounds,
            cost: Box::new(cost),
            cost_partial: None,
            social: Box::new(social),
            social_grad: None,
        })
    }

    pub fn with_cost_partial(mut self, f: impl Fn(&[f64], usize) -> f64 + Send + Sync + 'static) -> Self {
        self.cost_partial = Some(Box::new(f));
        self
    }

    pub fn with_social_gradient(mut self, f: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static) -> Self {
        self.social_grad = Some(Box::new(f));
        self
    }
}

impl AtomicGame for FnAtomicGame {
    fn n_players(&self) -> usize {
        self.bounds.len()
    }

    fn bounds(&self, i: usize) -> Interval {
        self.bounds[i]
    }

    fn player_cost(&self, x: &[f64], i: usize) -> Result<f64> {
        finite((self.cost)(x, i), || format!("cost of player {i}"))
    }

    fn player_cost_partial(&self, x: &[f64], i: usize) -> Result<f64> {
        match &self.cost_partial {
            Some(f) => finite(f(x, i), || format!("cost partial of player {i}")),
            None => fd::central_partial(|y| self.player_cost(y, i), x, i),
        }
    }

    fn social_cost(&self, x: &[f64]) -> Result<f64> {
        finite((self.social)(x), || "social cost".into())
    }

    fn social_cost_gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        match &self.social_grad {
            Some(f) => finite_vec(f(x), || "social cost gradient".into()),
            None => fd::central_gradient(|y| self.social_cost(y), x),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// `ℓ_i = ½x_i² + 0.5 x_i x_j`, Φ = Σ ½(x_i − ζ_i)² with ζ = 0.
    fn coupled_pair() -> FnAtomicGame {
        FnAtomicGame::new(
            vec![Interval::real_line(); 2],
            |x, i| 0.5 * x[i] * x[i] + 0.5 * x[i] * x[1 - i],
            |x| 0.5 * (x[0] * x[0] + x[1] * x[1]),
        )
        .unwrap()
    }

    #[test]
    fn zero_base_cost_total() {
        let g = FnAtomicGame::new(vec![Interval::real_line()], |_, _| 0.0, |_| 0.0).unwrap();
        assert_eq!(total_cost_atomic(&g, &[3.0], &[2.0], 0).unwrap(), 6.0);
    }

    #[test]
    fn dimension_mismatch_is_invalid_argument() {
        let g = coupled_pair();
        assert!(matches!(
            total_cost_atomic(&g, &[1.0], &[0.0, 0.0], 0),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            total_cost_atomic(&g, &[1.0, 2.0], &[0.0, 0.0], 2),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn separable_game_has_no_externality() {
        let g = FnAtomicGame::new(
            vec![Interval::real_line(); 3],
            |x, i| (x[i] - 1.0).powi(2),
            |x| x.iter().map(|v| (v - 1.0).powi(2)).sum(),
        )
        .unwrap();
        let e = externality_atomic(&g, &[0.3, -1.0, 2.0]).unwrap();
        assert!(e.iter().all(|v| v.abs() < 1e-7));
    }

    #[test]
    fn fd_fallback_matches_closed_form_externality() {
        // e_1 = (x_1 − 0) − x_1 − 0.5 x_2 at x = (1, 1) → −0.5
        let e = externality_atomic(&coupled_pair(), &[1.0, 1.0]).unwrap();
        assert!((e[0] + 0.5).abs() < 1e-7 && (e[1] + 0.5).abs() < 1e-7);
    }

    #[test]
    fn generic_solvers_find_known_equilibrium() {
        let g = coupled_pair();
        let p = [1.0, 1.0];
        let x = g.nash_equilibrium(&p, &[5.0, -3.0], SolverOptions::with_tol(1e-10)).unwrap();
        assert!((x[0] + 2.0 / 3.0).abs() < 1e-8 && (x[1] + 2.0 / 3.0).abs() < 1e-8);
        assert!(certify_nash_atomic(&g, &x, &p, 1e-8).unwrap().passed);
        let br = g.best_response(&[0.0, 1.0], &[0.2, 0.0], 0, 1e-12).unwrap();
        assert!((br + 0.7).abs() < 1e-9);
    }

    #[test]
    fn best_response_respects_bounds() {
        let g = FnAtomicGame::new(
            vec![Interval::new(0.0, 1.0).unwrap(); 2],
            |x, i| (x[i] - 3.0).powi(2) + x[0] * x[1],
            |x| x.iter().sum(),
        )
        .unwrap();
        assert_eq!(g.best_response(&[0.5, 0.5], &[0.0, 0.0], 0, 1e-12).unwrap(), 1.0);
        assert_eq!(g.best_response(&[0.5, 0.5], &[10.0, 0.0], 0, 1e-12).unwrap(), 0.0);
    }

    #[test]
    fn social_optimum_in_a_box() {
        let g = FnAtomicGame::new(
            vec![Interval::new(0.0, 1.0).unwrap(), Interval::new(-1.0, 1.0).unwrap()],
            |_, _| 0.0,
            |x| (x[0] - 2.0).powi(2) + (x[1] - 0.25).powi(2),
        )
        .unwrap();
        let x = social_optimum_atomic(&g, SolverOptions::with_tol(1e-9)).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-9 && (x[1] - 0.25).abs() < 1e-7);
        assert!(optimality_residual_atomic(&g, &x).unwrap() <= 1e-8);
    }

    #[test]
    fn oracle_failure_propagates() {
        let g = FnAtomicGame::new(vec![Interval::real_line()], |_, _| f64::NAN, |_| 0.0).unwrap();
        assert!(matches!(externality_atomic(&g, &[0.0]), Err(Error::Evaluation(_))));
    }
}
