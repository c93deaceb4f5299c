//! Non-atomic games: populations of infinitesimal players over finite action sets.

use nalgebra::DMatrix;

use crate::{vecops, Error, Result};

use super::atomic::{extragradient, projected_descent};
use super::{fd, finite, finite_vec, Certificate, IncentiveVector, PopulationLayout, SolverOptions, StrategyDistribution};

/// Oracle access to a non-atomic game. Strategy distributions and payments
/// are flat vectors laid out by [`PopulationLayout`].
pub trait NonAtomicGame: Sync {
    fn layout(&self) -> &PopulationLayout;

    /// Base costs `ℓ̃_i^j(x̃)` for every (population, action) pair.
    fn action_costs(&self, x: &[f64]) -> Result<Vec<f64>>;

    fn social_cost(&self, x: &[f64]) -> Result<f64>;

    fn social_cost_gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        fd::central_gradient(|y| self.social_cost(y), x)
    }

    /// Nash equilibrium `x̃*(p̃)`, warm-started from `warm`. The default is an
    /// extragradient method, which converges for monotone costs.
    fn nash_equilibrium(&self, p: &[f64], warm: &[f64], opts: SolverOptions) -> Result<Vec<f64>> {
        solve_nash_extragradient(self, p, warm, opts)
    }

    /// Minimiser of the social cost over feasible distributions.
    fn social_optimum(&self, opts: SolverOptions) -> Result<Vec<f64>> {
        social_optimum_nonatomic(self, opts).map(StrategyDistribution::into_inner)
    }

    /// Lipschitz constant of `x ↦ ℓ̃(x)` near `x`.
    fn game_lipschitz(&self, x: &[f64]) -> Result<f64> {
        fd::lipschitz_estimate(|y| self.action_costs(y), x)
    }
}

fn check_payment<G: NonAtomicGame + ?Sized>(game: &G, p: &[f64]) -> Result<()> {
    if p.len() != game.layout().dim() {
        return Err(Error::invalid_argument(format!(
            "incentive vector has length {}, expected {}",
            p.len(),
            game.layout().dim()
        )));
    }
    Ok(())
}

fn checked_costs<G: NonAtomicGame + ?Sized>(game: &G, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != game.layout().dim() {
        return Err(Error::invalid_argument(format!(
            "distribution has length {}, expected {}",
            x.len(),
            game.layout().dim()
        )));
    }
    finite_vec(game.action_costs(x)?, || "action costs".into())
}

/// Total costs `ℓ̃(x̃) + p̃` for every action.
pub fn total_costs<G: NonAtomicGame + ?Sized>(game: &G, x: &[f64], p: &[f64]) -> Result<Vec<f64>> {
    check_payment(game, p)?;
    let mut c = checked_costs(game, x)?;
    c.iter_mut().zip(p).for_each(|(a, b)| *a += b);
    Ok(c)
}

/// `ℓ̃_i^j(x̃) + p̃_i^j`.
pub fn total_cost_nonatomic<G: NonAtomicGame + ?Sized>(
    game: &G,
    x: &[f64],
    p: &[f64],
    i: usize,
    j: usize,
) -> Result<f64> {
    let k = game.layout().index(i, j)?;
    Ok(total_costs(game, x, p)?[k])
}

/// Externality `ẽ_i^j(x̃) = ∂Φ̃/∂x̃_i^j − ℓ̃_i^j(x̃)`.
pub fn externality_nonatomic<G: NonAtomicGame + ?Sized>(game: &G, x: &[f64]) -> Result<IncentiveVector> {
    let costs = checked_costs(game, x)?;
    let grad = finite_vec(game.social_cost_gradient(x)?, || "social cost gradient".into())?;
    Ok(IncentiveVector(grad.iter().zip(&costs).map(|(g, c)| g - c).collect()))
}

/// Largest cost excess over the population minimum among actions that carry
/// more than `tol · m_i` mass.
pub fn wardrop_gap<G: NonAtomicGame + ?Sized>(game: &G, x: &[f64], p: &[f64], tol: f64) -> Result<f64> {
    let c = total_costs(game, x, p)?;
    let layout = game.layout();
    let mut worst: f64 = 0.0;
    for i in 0..layout.n_populations() {
        let block = layout.block(i);
        let min = c[block.clone()].iter().copied().fold(f64::INFINITY, f64::min);
        for k in block {
            if x[k] > tol * layout.mass(i) {
                worst = worst.max(c[k] - min);
            }
        }
    }
    Ok(worst)
}

/// Certifies that every action used by more than `tol · m_i` mass has total
/// cost within `tol` of its population's cheapest action.
pub fn certify_nash_nonatomic<G: NonAtomicGame + ?Sized>(
    game: &G,
    x: &[f64],
    p: &[f64],
    tol: f64,
) -> Result<Certificate> {
    Ok(Certificate::from_residual(wardrop_gap(game, x, p, tol)?, tol))
}

/// Natural residual `‖x̃ − P(x̃ − (ℓ̃(x̃) + p̃))‖∞` of the equilibrium VI.
pub fn nash_residual_nonatomic<G: NonAtomicGame + ?Sized>(game: &G, x: &[f64], p: &[f64]) -> Result<f64> {
    let c = total_costs(game, x, p)?;
    let step: Vec<f64> = x.iter().zip(&c).map(|(a, b)| a - b).collect();
    Ok(vecops::dist_inf(x, &game.layout().project(&step)))
}

/// Projected-gradient residual of the social cost over the product of simplices.
pub fn optimality_residual_nonatomic<G: NonAtomicGame + ?Sized>(game: &G, x: &[f64]) -> Result<f64> {
    let g = finite_vec(game.social_cost_gradient(x)?, || "social cost gradient".into())?;
    let step: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a - b).collect();
    Ok(vecops::dist_inf(x, &game.layout().project(&step)))
}

/// Minimises `Φ̃` over feasible distributions by projected gradient descent.
pub fn social_optimum_nonatomic<G: NonAtomicGame + ?Sized>(
    game: &G,
    opts: SolverOptions,
) -> Result<StrategyDistribution> {
    let layout = game.layout();
    projected_descent(
        |x| game.social_cost(x),
        |x| game.social_cost_gradient(x),
        |v| layout.project(v),
        layout.uniform(),
        opts,
        "social optimum (projected gradient)",
    )
    .map(StrategyDistribution)
}

pub fn solve_nash_extragradient<G: NonAtomicGame + ?Sized>(
    game: &G,
    p: &[f64],
    warm: &[f64],
    opts: SolverOptions,
) -> Result<Vec<f64>> {
    check_payment(game, p)?;
    let layout = game.layout();
    extragradient(
        |x| total_costs(game, x, p),
        |v| layout.project(v),
        warm.to_vec(),
        opts,
        "non-atomic Nash equilibrium (extragradient)",
    )
}

/// All of each population's mass on its cheapest action; ties go to the
/// lowest action index.
pub fn best_response_nonatomic(layout: &PopulationLayout, total_costs: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; layout.dim()];
    for i in 0..layout.n_populations() {
        let block = layout.block(i);
        let mut best = block.start;
        for k in block {
            if total_costs[k] < total_costs[best] {
                best = k;
            }
        }
        out[best] = layout.mass(i);
    }
    out
}

/// Logit choice `m_i · softmax(−c_i / η)` for each population.
pub fn logit_response(layout: &PopulationLayout, total_costs: &[f64], temperature: f64) -> Vec<f64> {
    let mut out = vec![0.0; layout.dim()];
    for i in 0..layout.n_populations() {
        let block = layout.block(i);
        let min = total_costs[block.clone()]
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        let weights: Vec<f64> = total_costs[block.clone()]
            .iter()
            .map(|c| (-(c - min) / temperature).exp())
            .collect();
        let s: f64 = weights.iter().sum();
        for (k, w) in block.zip(weights) {
            out[k] = layout.mass(i) * w / s;
        }
    }
    out
}

type CostsFn = dyn Fn(&[f64]) -> Vec<f64> + Send + Sync;
type SocialFn = dyn Fn(&[f64]) -> f64 + Send + Sync;

/// Non-atomic game from closures; the social-cost gradient falls back to
/// central differences when not supplied.
pub struct FnNonAtomicGame {
    layout: PopulationLayout,
    costs: Box<CostsFn>,
    social: Box<SocialFn>,
    social_grad: Option<Box<CostsFn>>,
}

impl FnNonAtomicGame {
    pub fn new(
        layout: PopulationLayout,
        costs: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
        social: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        FnNonAtomicGame {
            layout,
            costs: Box::new(costs),
            social: Box::new(social),
            social_grad: None,
        }
    }

    pub fn with_social_gradient(mut self, f: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static) -> Self {
        self.social_grad = Some(Box::new(f));
        self
    }
}

impl NonAtomicGame for FnNonAtomicGame {
    fn layout(&self) -> &PopulationLayout {
        &self.layout
    }

    fn action_costs(&self, x: &[f64]) -> Result<Vec<f64>> {
        finite_vec((self.costs)(x), || "action costs".into())
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

/// Population game with affine costs `ℓ̃(x̃) = C x̃ + b` and total-cost social
/// objective `Φ̃(x̃) = Σ x̃ · ℓ̃(x̃)`.
#[derive(Debug, Clone)]
pub struct AffinePopulationGame {
    layout: PopulationLayout,
    matrix: DMatrix<f64>,
    offset: Vec<f64>,
}

impl AffinePopulationGame {
    pub fn new(layout: PopulationLayout, matrix: DMatrix<f64>, offset: Vec<f64>) -> Result<Self> {
        let n = layout.dim();
        if matrix.nrows() != n || matrix.ncols() != n || offset.len() != n {
            return Err(Error::invalid_spec(format!(
                "affine costs must be {n}x{n} with an offset of length {n}"
            )));
        }
        if matrix.iter().chain(offset.iter()).any(|v| !v.is_finite()) {
            return Err(Error::invalid_spec("affine cost data must be finite"));
        }
        Ok(AffinePopulationGame { layout, matrix, offset })
    }
}

impl NonAtomicGame for AffinePopulationGame {
    fn layout(&self) -> &PopulationLayout {
        &self.layout
    }

    fn action_costs(&self, x: &[f64]) -> Result<Vec<f64>> {
        let v = &self.matrix * nalgebra::DVector::from_column_slice(x);
        Ok(v.iter().zip(&self.offset).map(|(a, b)| a + b).collect())
    }

    fn social_cost(&self, x: &[f64]) -> Result<f64> {
        Ok(vecops::dot(x, &self.action_costs(x)?))
    }

    fn social_cost_gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        let sym = &self.matrix + self.matrix.transpose();
        let v = sym * nalgebra::DVector::from_column_slice(x);
        Ok(v.iter().zip(&self.offset).map(|(a, b)| a + b).collect())
    }

    fn game_lipschitz(&self, _x: &[f64]) -> Result<f64> {
        Ok(self.matrix.norm())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::MASS_TOL;

    /// Two parallel links with latencies x¹ and x², unit mass.
    fn two_links() -> AffinePopulationGame {
        AffinePopulationGame::new(
            PopulationLayout::new(&[(1.0, 2)]).unwrap(),
            DMatrix::identity(2, 2),
            vec![0.0, 0.0],
        )
        .unwrap()
    }

    #[test]
    fn total_costs_on_two_links() {
        let g = two_links();
        assert_eq!(total_cost_nonatomic(&g, &[0.5, 0.5], &[0.0, 0.0], 0, 0).unwrap(), 0.5);
        assert_eq!(total_cost_nonatomic(&g, &[1.0, 0.0], &[0.0, 0.0], 0, 0).unwrap(), 1.0);
        assert_eq!(total_cost_nonatomic(&g, &[1.0, 0.0], &[0.0, 0.0], 0, 1).unwrap(), 0.0);
        assert_eq!(total_cost_nonatomic(&g, &[0.5, 0.5], &[0.5, 0.5], 0, 1).unwrap(), 1.0);
        assert!(matches!(
            total_cost_nonatomic(&g, &[0.5, 0.5], &[0.0, 0.0], 0, 2),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            total_cost_nonatomic(&g, &[0.5, 0.5], &[0.0, 0.0], 1, 0),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn constant_costs_zero_base_cost() {
        let g = FnNonAtomicGame::new(PopulationLayout::new(&[(1.0, 2)]).unwrap(), |_| vec![0.0, 0.0], |_| 0.0);
        assert_eq!(total_cost_nonatomic(&g, &[0.5, 0.5], &[1.0, 1.0], 0, 0).unwrap(), 1.0);
        // Costs ≡ c with Φ̃ linear of slope c: no externality.
        let c = 2.5;
        let g = FnNonAtomicGame::new(
            PopulationLayout::new(&[(1.0, 3)]).unwrap(),
            move |_| vec![c; 3],
            move |x| c * x.iter().sum::<f64>(),
        );
        let e = externality_nonatomic(&g, &[0.2, 0.3, 0.5]).unwrap();
        assert!(e.iter().all(|v| v.abs() < 1e-8));
    }

    #[test]
    fn two_link_externality_is_half() {
        let e = externality_nonatomic(&two_links(), &[0.5, 0.5]).unwrap();
        assert_eq!(e.0, vec![0.5, 0.5]);
    }

    #[test]
    fn two_link_nash_certificates() {
        let g = two_links();
        assert!(certify_nash_nonatomic(&g, &[0.5, 0.5], &[0.0, 0.0], 1e-9).unwrap().passed);
        assert!(certify_nash_nonatomic(&g, &[0.0, 1.0], &[2.0, 0.0], 1e-9).unwrap().passed);
        assert!(!certify_nash_nonatomic(&g, &[1.0, 0.0], &[0.0, 0.0], 1e-9).unwrap().passed);
        let single = FnNonAtomicGame::new(PopulationLayout::new(&[(2.0, 1), (1.0, 1)]).unwrap(), |x| x.to_vec(), |_| 0.0);
        assert!(certify_nash_nonatomic(&single, &[2.0, 1.0], &[5.0, -1.0], 1e-12).unwrap().passed);
    }

    #[test]
    fn generic_equilibrium_and_optimum() {
        let g = two_links();
        let x = g.nash_equilibrium(&[0.4, 0.0], &[1.0, 0.0], SolverOptions::with_tol(1e-12)).unwrap();
        assert!((x[0] - 0.3).abs() < 1e-10);
        let opt = social_optimum_nonatomic(&g, SolverOptions::with_tol(1e-12)).unwrap();
        assert!((opt[0] - 0.5).abs() < 1e-10);
        assert!((g.social_cost(&opt).unwrap() - 0.5).abs() < 1e-12);
        assert!(g.layout().is_feasible(&opt, MASS_TOL));
    }

    #[test]
    fn best_response_ties_lowest_index() {
        let l = PopulationLayout::new(&[(1.0, 3), (2.0, 2)]).unwrap();
        let br = best_response_nonatomic(&l, &[1.0, 0.5, 0.5, 3.0, 3.0]);
        assert_eq!(br, vec![0.0, 1.0, 0.0, 2.0, 0.0]);
    }

    #[test]
    fn logit_of_uniform_costs_is_uniform() {
        let l = PopulationLayout::new(&[(3.0, 3)]).unwrap();
        let x = logit_response(&l, &[0.7, 0.7, 0.7], 0.1);
        assert!(x.iter().all(|v| (v - 1.0).abs() < 1e-15));
    }
}
