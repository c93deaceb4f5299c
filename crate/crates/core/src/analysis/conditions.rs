use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::ode::drift;
use crate::aggregative::AggregativeGame;
use crate::dynamics::CoupledGame;
use crate::routing::{delta_matrix, optimal_edge_tolls, RoutingNetwork};
use crate::{vecops, Error, Result};

/// Cross-partials of `p ↦ e(x*(p))` must exceed this to count as positive;
/// anything smaller is indistinguishable from finite-difference noise.
pub const CROSS_PARTIAL_FLOOR: f64 = 1e-7;

/// Scales `ε` tried along `p' = (1 + ε) p†` when looking for an incentive
/// that dominates the drift.
const DOMINATION_SCALES: [f64; 5] = [1e-2, 1e-1, 1.0, 10.0, 100.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossPartialSample {
    pub incentive: Vec<f64>,
    /// Smallest off-diagonal entry of the Jacobian of `p ↦ e(x*(p))`.
    pub min_off_diagonal: f64,
    pub off_diagonal_positive: bool,
}

/// One sign orientation of the cooperative-system boundary conditions: the
/// drift at zero, the optimal incentive and a dominating incentive all point
/// the same way.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrthantConditions {
    pub drift_at_zero: bool,
    pub optimum_in_orthant: bool,
    /// `ε` values along `(1 + ε) p†` at which the drift has the required sign.
    pub dominating_scales: Vec<f64>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossPartialReport {
    pub samples: Vec<CrossPartialSample>,
    pub all_off_diagonal_positive: bool,
    pub externality_at_zero: Vec<f64>,
    pub optimal_incentive: Vec<f64>,
    pub nonnegative: OrthantConditions,
    pub nonpositive: OrthantConditions,
    pub passed: bool,
}

/// Samples the cooperative-system sufficient condition: positive
/// cross-partials `∂e_i(x*(p))/∂p_j` at every sample, plus the boundary
/// conditions in the nonnegative or the nonpositive orthant. Based on
/// finitely many samples, so a pass is evidence, not proof.
pub fn check_cross_partial_condition<G: CoupledGame + ?Sized>(
    game: &G,
    samples: &[Vec<f64>],
    tol: f64,
) -> Result<CrossPartialReport> {
    let n = game.incentive_dim();
    if let Some(bad) = samples.iter().find(|s| s.len() != n) {
        return Err(Error::invalid_argument(format!("sample has length {}, expected {n}", bad.len())));
    }
    let warm = game.default_strategy();
    let externality_at = |p: &[f64]| -> Result<Vec<f64>> {
        let x = game.equilibrium(p, &warm, tol)?;
        game.externality(&x)
    };
    let samples = samples
        .iter()
        .map(|p| {
            let jac = crate::game::fd::central_jacobian(externality_at, p, |v| 1e-4 * (1.0 + v.abs()))?;
            let min_off_diagonal = (0..n)
                .flat_map(|j| (0..n).filter(move |i| *i != j).map(move |i| (i, j)))
                .map(|(i, j)| jac[j][i])
                .fold(f64::INFINITY, f64::min);
            Ok(CrossPartialSample {
                incentive: p.clone(),
                min_off_diagonal,
                off_diagonal_positive: min_off_diagonal > CROSS_PARTIAL_FLOOR,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let all_off_diagonal_positive = samples.iter().all(|s| s.off_diagonal_positive);

    let zero = vec![0.0; n];
    let externality_at_zero = externality_at(&zero)?;
    let optimal_incentive = game.optimal_incentive(tol)?;
    let mut dominating = [Vec::new(), Vec::new()];
    for eps in DOMINATION_SCALES {
        let p: Vec<f64> = optimal_incentive.iter().map(|v| (1.0 + eps) * v).collect();
        let (_, d) = drift(game, &p, &warm, tol)?;
        if d.iter().all(|v| *v <= tol) {
            dominating[0].push(eps);
        }
        if d.iter().all(|v| *v >= -tol) {
            dominating[1].push(eps);
        }
    }
    let [up, down] = dominating;
    let orthant = |sign: f64, scales: Vec<f64>| {
        let drift_at_zero = externality_at_zero.iter().all(|v| sign * v >= -tol);
        let optimum_in_orthant = optimal_incentive.iter().all(|v| sign * v >= -tol);
        let passed = drift_at_zero && optimum_in_orthant && scales.len() == DOMINATION_SCALES.len();
        OrthantConditions {
            drift_at_zero,
            optimum_in_orthant,
            dominating_scales: scales,
            passed,
        }
    };
    let nonnegative = orthant(1.0, up);
    let nonpositive = orthant(-1.0, down);
    let passed = all_off_diagonal_positive && (nonnegative.passed || nonpositive.passed);
    Ok(CrossPartialReport {
        samples,
        all_off_diagonal_positive,
        externality_at_zero,
        optimal_incentive,
        nonnegative,
        nonpositive,
        passed,
    })
}

/// `V(p) = (p − c)ᵀ S (p − c)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadraticForm {
    pub center: Vec<f64>,
    /// Row-major `S`.
    pub matrix: Vec<Vec<f64>>,
}

impl QuadraticForm {
    pub fn new(center: Vec<f64>, matrix: Vec<Vec<f64>>) -> Result<Self> {
        let n = center.len();
        if matrix.len() != n || matrix.iter().any(|r| r.len() != n) {
            return Err(Error::invalid_argument(format!("quadratic form matrix must be {n}×{n}")));
        }
        if center.iter().chain(matrix.iter().flatten()).any(|v| !v.is_finite()) {
            return Err(Error::invalid_argument("quadratic form entries must be finite"));
        }
        Ok(QuadraticForm { center, matrix })
    }

    pub fn diagonal(center: Vec<f64>, diag: &[f64]) -> Result<Self> {
        let n = diag.len();
        let matrix = (0..n)
            .map(|i| (0..n).map(|j| if i == j { diag[i] } else { 0.0 }).collect())
            .collect();
        Self::new(center, matrix)
    }

    fn from_dmatrix(center: Vec<f64>, m: &DMatrix<f64>) -> Result<Self> {
        let rows = (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect();
        Self::new(center, rows)
    }

    /// `(p − p†)ᵀ M⁻ᵀ (p − p†)` for a networked aggregative game.
    pub fn aggregative(game: &AggregativeGame) -> Result<Self> {
        Self::from_dmatrix(game.optimal_incentive().into_inner(), &game.m_inverse().transpose())
    }

    /// `(p − p†)ᵀ Δ (p − p†)` with `Δ_aa = 1 / (l'_a + w_a l''_a)` at the system
    /// optimum. Needs strictly increasing latencies.
    pub fn routing(net: &RoutingNetwork, tol: f64) -> Result<Self> {
        let tolls = optimal_edge_tolls(net, tol)?;
        let delta = delta_matrix(net, &tolls.optimum.edge_flow)?;
        Self::diagonal(tolls.tolls, &delta)
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn value(&self, p: &[f64]) -> f64 {
        let d = self.offset(p);
        self.matrix
            .iter()
            .zip(&d)
            .map(|(row, di)| di * vecops::dot(row, &d))
            .sum()
    }

    /// `(S + Sᵀ)(p − c)`.
    pub fn gradient(&self, p: &[f64]) -> Vec<f64> {
        let d = self.offset(p);
        (0..self.dim())
            .map(|i| {
                (0..self.dim())
                    .map(|j| (self.matrix[i][j] + self.matrix[j][i]) * d[j])
                    .sum()
            })
            .collect()
    }

    fn offset(&self, p: &[f64]) -> Vec<f64> {
        p.iter().zip(&self.center).map(|(a, b)| a - b).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecrementSample {
    pub incentive: Vec<f64>,
    pub value: f64,
    /// `∇V(p)ᵀ (e(x*(p)) − p)`.
    pub decrement: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LyapunovReport {
    pub samples: Vec<DecrementSample>,
    pub max_decrement: f64,
    /// `max (decrement + 2V)`; nonpositive means `V` decays at least at rate 2.
    pub max_decrement_plus_twice_value: f64,
    /// Indices of samples with `V > 0` but a nonnegative decrement.
    pub violations: Vec<usize>,
    pub passed: bool,
}

/// Evaluates the decrement of the candidate Lyapunov function `v` along the
/// slow dynamics at every sample. A sample with `V(p) ≤ √tol` counts as the
/// fixed point itself and cannot violate.
pub fn check_lyapunov_condition<G: CoupledGame + ?Sized>(
    game: &G,
    v: &QuadraticForm,
    samples: &[Vec<f64>],
    tol: f64,
) -> Result<LyapunovReport> {
    let n = game.incentive_dim();
    if v.dim() != n {
        return Err(Error::invalid_argument(format!(
            "Lyapunov candidate has dimension {}, expected {n}",
            v.dim()
        )));
    }
    if let Some(bad) = samples.iter().find(|s| s.len() != n) {
        return Err(Error::invalid_argument(format!("sample has length {}, expected {n}", bad.len())));
    }
    let warm = game.default_strategy();
    let samples = samples
        .iter()
        .map(|p| {
            let (_, d) = drift(game, p, &warm, tol)?;
            Ok(DecrementSample {
                incentive: p.clone(),
                value: v.value(p),
                decrement: vecops::dot(&v.gradient(p), &d),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let floor = tol.sqrt();
    let violations: Vec<usize> = samples
        .iter()
        .enumerate()
        .filter(|(_, s)| s.value > floor && !(s.decrement < 0.0))
        .map(|(i, _)| i)
        .collect();
    Ok(LyapunovReport {
        max_decrement: samples.iter().map(|s| s.decrement).fold(f64::NEG_INFINITY, f64::max),
        max_decrement_plus_twice_value: samples
            .iter()
            .map(|s| s.decrement + 2.0 * s.value)
            .fold(f64::NEG_INFINITY, f64::max),
        passed: violations.is_empty(),
        violations,
        samples,
    })
}
