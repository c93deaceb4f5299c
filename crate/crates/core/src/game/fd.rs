//! Central finite differences, used as a fallback for user-defined games and
//! as an independent check on analytic gradients.

use crate::{vecops, Result};

use super::{AtomicGame, NonAtomicGame};

pub fn central_partial<F>(f: F, x: &[f64], j: usize) -> Result<f64>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    let h = vecops::fd_step(x[j]);
    let mut y = x.to_vec();
    y[j] = x[j] + h;
    let up = f(&y)?;
    y[j] = x[j] - h;
    let down = f(&y)?;
    Ok((up - down) / (2.0 * h))
}

pub fn central_gradient<F>(f: F, x: &[f64]) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    (0..x.len()).map(|j| central_partial(&f, x, j)).collect()
}

/// Column-major finite-difference Jacobian of `f` with step `step(x_j)`.
pub fn central_jacobian<F, S>(f: F, x: &[f64], step: S) -> Result<Vec<Vec<f64>>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
    S: Fn(f64) -> f64,
{
    let mut cols = Vec::with_capacity(x.len());
    let mut y = x.to_vec();
    for j in 0..x.len() {
        let h = step(x[j]);
        y[j] = x[j] + h;
        let up = f(&y)?;
        y[j] = x[j] - h;
        let down = f(&y)?;
        y[j] = x[j];
        cols.push(up.iter().zip(&down).map(|(u, d)| (u - d) / (2.0 * h)).collect());
    }
    Ok(cols)
}

/// Frobenius norm of a finite-difference Jacobian; an upper bound on its
/// spectral norm and hence a usable Lipschitz estimate for a smooth map.
pub fn lipschitz_estimate<F>(f: F, x: &[f64]) -> Result<f64>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let jac = central_jacobian(f, x, |v| 1e-5 * (1.0 + v.abs()))?;
    Ok(jac
        .iter()
        .flat_map(|c| c.iter())
        .map(|v| v * v)
        .sum::<f64>()
        .sqrt())
}

/// Largest relative disagreement between the analytic oracles of an atomic
/// game and central differences of its value oracles at `x`.
pub fn atomic_gradient_error<G: AtomicGame + ?Sized>(game: &G, x: &[f64]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for i in 0..game.n_players() {
        let fd = central_partial(|y| game.player_cost(y, i), x, i)?;
        worst = worst.max(vecops::rel_err(fd, game.player_cost_partial(x, i)?));
    }
    let fd = central_gradient(|y| game.social_cost(y), x)?;
    for (a, b) in fd.iter().zip(game.social_cost_gradient(x)?) {
        worst = worst.max(vecops::rel_err(*a, b));
    }
    Ok(worst)
}

/// Same check for the social-cost gradient of a non-atomic game.
pub fn nonatomic_gradient_error<G: NonAtomicGame + ?Sized>(game: &G, x: &[f64]) -> Result<f64> {
    let fd = central_gradient(|y| game.social_cost(y), x)?;
    Ok(fd
        .iter()
        .zip(game.social_cost_gradient(x)?)
        .fold(0.0, |m, (a, b)| m.max(vecops::rel_err(*a, b))))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gradient_of_cubic() {
        let f = |x: &[f64]| Ok(x[0].powi(3) + 2.0 * x[0] * x[1]);
        let g = central_gradient(f, &[1.5, -2.0]).unwrap();
        assert!((g[0] - (3.0 * 2.25 - 4.0)).abs() < 1e-8);
        assert!((g[1] - 3.0).abs() < 1e-8);
    }

    #[test]
    fn jacobian_of_linear_map() {
        let f = |x: &[f64]| Ok(vec![2.0 * x[0] - x[1], 3.0 * x[1]]);
        let j = central_jacobian(f, &[0.3, 0.9], |_| 1e-4).unwrap();
        assert!((j[0][0] - 2.0).abs() < 1e-9 && (j[0][1]).abs() < 1e-9);
        assert!((j[1][0] + 1.0).abs() < 1e-9 && (j[1][1] - 3.0).abs() < 1e-9);
        let l = lipschitz_estimate(f, &[0.0, 0.0]).unwrap();
        assert!((l - 14f64.sqrt()).abs() < 1e-8);
    }
}
