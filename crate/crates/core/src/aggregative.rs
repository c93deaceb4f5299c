//! Quadratic networked aggregative games.
//!
//! Player `i` pays `ℓ_i(x) = ½ q_i x_i² + α x_i (A x)_i` on the real line, so
//! the game map is `x ↦ M x` with `M = Q + α A` and the equilibrium under
//! payments `p` is `x*(p) = −M⁻¹ p`. The social cost is either
//! `Φ(x) = Σ ½ (x_i − ζ_i)²` or a separable `Σ h_i(x_i)` with strictly convex
//! terms. Everything here is closed form except the roots `y†` of `∇h_i`,
//! found by bisection.

use nalgebra::{DMatrix, DVector, LU};
use serde::{Deserialize, Serialize};

use crate::dynamics::{Regularizer, StrategyUpdateRule};
use crate::game::{AtomicGame, IncentiveVector, Interval, SolverOptions, StrategyProfile};
use crate::{Error, Result};

/// Condition numbers above this make `M` numerically singular.
pub const MAX_CONDITION: f64 = 1e12;
/// Largest bracket half-width tried when locating a root of `∇h_i`.
pub const MAX_BRACKET: f64 = 1e6;
const SYMMETRY_TOL: f64 = 1e-12;

/// One separable social-cost term `h_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ConvexTerm {
    /// `½ w (x − c)²`.
    Quadratic {
        center: f64,
        #[serde(default = "one")]
        weight: f64,
    },
    /// `¼ s (x − c)⁴ + ½ w (x − c)²`.
    Quartic {
        center: f64,
        #[serde(default = "one")]
        quartic: f64,
        #[serde(default)]
        weight: f64,
    },
    /// `∇h` given by linear interpolation through `(x, grad)` knots and linear
    /// extrapolation beyond them; `h` vanishes at the first knot.
    Table { x: Vec<f64>, grad: Vec<f64> },
}

fn one() -> f64 {
    1.0
}

impl ConvexTerm {
    pub fn quadratic(center: f64) -> Self {
        ConvexTerm::Quadratic { center, weight: 1.0 }
    }

    fn validate(&self) -> Result<()> {
        let ok = match self {
            ConvexTerm::Quadratic { center, weight } => center.is_finite() && *weight > 0.0 && weight.is_finite(),
            ConvexTerm::Quartic {
                center,
                quartic,
                weight,
            } => {
                center.is_finite()
                    && *quartic >= 0.0
                    && *weight >= 0.0
                    && quartic + weight > 0.0
                    && (quartic + weight).is_finite()
            }
            ConvexTerm::Table { x, grad } => {
                x.len() >= 2
                    && x.len() == grad.len()
                    && x.iter().chain(grad).all(|v| v.is_finite())
                    && x.windows(2).all(|w| w[0] < w[1])
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid_spec(format!("malformed social-cost term {self:?}")))
        }
    }

    /// Segment of a table term containing `t` (clamped to the end segments).
    fn segment(xs: &[f64], t: f64) -> usize {
        xs.partition_point(|v| *v <= t).clamp(1, xs.len() - 1) - 1
    }

    pub fn value(&self, t: f64) -> f64 {
        match self {
            ConvexTerm::Quadratic { center, weight } => 0.5 * weight * (t - center).powi(2),
            ConvexTerm::Quartic {
                center,
                quartic,
                weight,
            } => {
                let d = t - center;
                0.25 * quartic * d.powi(4) + 0.5 * weight * d * d
            }
            ConvexTerm::Table { x, grad } => {
                let s = Self::segment(x, t);
                let integral = |k: usize, from: f64, to: f64| {
                    let slope = (grad[k + 1] - grad[k]) / (x[k + 1] - x[k]);
                    let g = |u: f64| grad[k] + slope * (u - x[k]);
                    0.5 * (g(from) + g(to)) * (to - from)
                };
                let mut acc = 0.0;
                for k in 0..s {
                    acc += integral(k, x[k], x[k + 1]);
                }
                acc + integral(s, x[s], t)
            }
        }
    }

    pub fn grad(&self, t: f64) -> f64 {
        match self {
            ConvexTerm::Quadratic { center, weight } => weight * (t - center),
            ConvexTerm::Quartic {
                center,
                quartic,
                weight,
            } => {
                let d = t - center;
                quartic * d.powi(3) + weight * d
            }
            ConvexTerm::Table { x, grad } => {
                let s = Self::segment(x, t);
                grad[s] + (grad[s + 1] - grad[s]) / (x[s + 1] - x[s]) * (t - x[s])
            }
        }
    }

    pub fn hess(&self, t: f64) -> f64 {
        match self {
            ConvexTerm::Quadratic { weight, .. } => *weight,
            ConvexTerm::Quartic {
                center,
                quartic,
                weight,
            } => 3.0 * quartic * (t - center).powi(2) + weight,
            ConvexTerm::Table { x, grad } => {
                let s = Self::segment(x, t);
                (grad[s + 1] - grad[s]) / (x[s + 1] - x[s])
            }
        }
    }

    /// Root of `∇h` by bisection on `[−R, R]`, doubling `R` from 1 up to
    /// [`MAX_BRACKET`].
    pub fn gradient_root(&self) -> Result<f64> {
        let g = |t: f64| self.grad(t);
        let mut r = 1.0;
        while !(g(-r) <= 0.0 && g(r) >= 0.0) {
            r *= 2.0;
            if r > MAX_BRACKET {
                return Err(Error::invalid_spec(format!(
                    "no root of the social-cost gradient in [-{MAX_BRACKET:e}, {MAX_BRACKET:e}]"
                )));
            }
        }
        for end in [-r, r] {
            if g(end) == 0.0 {
                return Ok(end);
            }
        }
        let (mut lo, mut hi) = (-r, r);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let v = g(mid);
            if v == 0.0 {
                return Ok(mid);
            }
            if v < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= f64::EPSILON * (1.0 + mid.abs()) {
                break;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

/// The social-cost target.
#[derive(Debug, Clone, PartialEq)]
pub enum SocialTarget {
    /// `Φ(x) = Σ ½ (x_i − ζ_i)²`.
    Tracking(Vec<f64>),
    /// `Φ(x) = Σ h_i(x_i)`.
    Separable(Vec<ConvexTerm>),
}

/// JSON form: `{"q", "A", "alpha"}` plus exactly one of `"zeta"` or `"h"`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AggregativeSpecJson {
    pub q: Vec<f64>,
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    pub alpha: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zeta: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<Vec<ConvexTerm>>,
}

/// A validated quadratic aggregative game with its factorised `M = Q + αA`.
#[derive(Debug, Clone)]
pub struct AggregativeGame {
    q: Vec<f64>,
    coupling: DMatrix<f64>,
    alpha: f64,
    target: SocialTarget,
    m: DMatrix<f64>,
    lu: LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    lu_transpose: LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    condition: f64,
    target_point: Vec<f64>,
}

impl AggregativeGame {
    pub fn new(q: Vec<f64>, coupling: DMatrix<f64>, alpha: f64, target: SocialTarget) -> Result<Self> {
        let n = q.len();
        if n == 0 {
            return Err(Error::invalid_spec("an aggregative game needs at least one player"));
        }
        if let Some(v) = q.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
            return Err(Error::invalid_spec(format!("own-cost curvatures must be positive, got {v}")));
        }
        if coupling.nrows() != n || coupling.ncols() != n {
            return Err(Error::invalid_spec(format!("coupling matrix must be {n}x{n}")));
        }
        if coupling.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid_spec("coupling matrix must be finite"));
        }
        if (0..n).any(|i| coupling[(i, i)] != 0.0) {
            return Err(Error::invalid_spec("coupling matrix must have a zero diagonal"));
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::invalid_spec(format!("coupling strength must be positive, got {alpha}")));
        }
        let target_point = match &target {
            SocialTarget::Tracking(zeta) => {
                if zeta.len() != n || zeta.iter().any(|v| !v.is_finite()) {
                    return Err(Error::invalid_spec(format!("target must have {n} finite entries")));
                }
                zeta.clone()
            }
            SocialTarget::Separable(terms) => {
                if terms.len() != n {
                    return Err(Error::invalid_spec(format!("expected {n} social-cost terms")));
                }
                for (i, h) in terms.iter().enumerate() {
                    h.validate()?;
                    let grid: Vec<f64> = (0..=400).map(|k| -10.0 + 0.05 * k as f64).collect();
                    if grid.windows(2).any(|w| h.grad(w[0]) >= h.grad(w[1])) {
                        return Err(Error::invalid_spec(format!(
                            "social-cost term {i} does not have a strictly increasing gradient"
                        )));
                    }
                }
                terms.iter().map(ConvexTerm::gradient_root).collect::<Result<_>>()?
            }
        };

        let m = DMatrix::from_diagonal(&DVector::from_vec(q.clone())) + &coupling * alpha;
        let sv = m.singular_values();
        let (smax, smin) = (sv.max(), sv.min());
        let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
        if !(condition <= MAX_CONDITION) {
            return Err(Error::invalid_spec(format!(
                "M invertibility: M = Q + alpha A has condition number {condition:.3e} (limit {MAX_CONDITION:e})"
            )));
        }
        let lu = m.clone().lu();
        let lu_transpose = m.transpose().lu();
        Ok(AggregativeGame {
            q,
            coupling,
            alpha,
            target,
            m,
            lu,
            lu_transpose,
            condition,
            target_point,
        })
    }

    /// Game whose `M` equals `m` exactly: `Q = diag(m)`, `α = 1`, `A = m − Q`.
    pub fn from_m(m: DMatrix<f64>, target: SocialTarget) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::invalid_spec("M must be square"));
        }
        let q: Vec<f64> = m.diagonal().iter().copied().collect();
        let mut coupling = m;
        coupling.fill_diagonal(0.0);
        AggregativeGame::new(q, coupling, 1.0, target)
    }

    pub fn from_json_spec(spec: AggregativeSpecJson) -> Result<Self> {
        let n = spec.q.len();
        if spec.a.len() != n || spec.a.iter().any(|row| row.len() != n) {
            return Err(Error::invalid_spec(format!("\"A\" must be {n}x{n}")));
        }
        let coupling = DMatrix::from_fn(n, n, |i, j| spec.a[i][j]);
        let target = match (spec.zeta, spec.h) {
            (Some(z), None) => SocialTarget::Tracking(z),
            (None, Some(h)) => SocialTarget::Separable(h),
            _ => return Err(Error::invalid_spec("give exactly one of \"zeta\" or \"h\"")),
        };
        AggregativeGame::new(spec.q, coupling, spec.alpha, target)
    }

    pub fn to_json_spec(&self) -> AggregativeSpecJson {
        let n = self.n();
        let (zeta, h) = match &self.target {
            SocialTarget::Tracking(z) => (Some(z.clone()), None),
            SocialTarget::Separable(t) => (None, Some(t.clone())),
        };
        AggregativeSpecJson {
            q: self.q.clone(),
            a: (0..n).map(|i| (0..n).map(|j| self.coupling[(i, j)]).collect()).collect(),
            alpha: self.alpha,
            zeta,
            h,
        }
    }

    pub fn n(&self) -> usize {
        self.q.len()
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn coupling(&self) -> &DMatrix<f64> {
        &self.coupling
    }

    pub fn target(&self) -> &SocialTarget {
        &self.target
    }

    /// `M = Q + αA`.
    pub fn m(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn m_inverse(&self) -> DMatrix<f64> {
        self.lu.try_inverse().expect("M was checked to be well conditioned")
    }

    pub fn condition_number(&self) -> f64 {
        self.condition
    }

    /// The social optimum: `ζ`, or the roots `y†` of the `∇h_i`.
    pub fn target_point(&self) -> &[f64] {
        &self.target_point
    }

    fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let v = self
            .lu
            .solve(&DVector::from_column_slice(rhs))
            .expect("M was checked to be well conditioned");
        v.iter().copied().collect()
    }

    fn m_times(&self, v: &[f64]) -> Vec<f64> {
        (&self.m * DVector::from_column_slice(v)).iter().copied().collect()
    }

    fn check_len(&self, v: &[f64], what: &str) -> Result<()> {
        if v.len() != self.n() {
            return Err(Error::invalid_argument(format!(
                "{what} has length {}, expected {}",
                v.len(),
                self.n()
            )));
        }
        Ok(())
    }

    /// `x*(p) = −M⁻¹ p`.
    pub fn nash_closed_form(&self, p: &[f64]) -> Result<StrategyProfile> {
        self.check_len(p, "incentive vector")?;
        let neg: Vec<f64> = p.iter().map(|v| -v).collect();
        Ok(StrategyProfile(self.solve(&neg)))
    }

    /// `p† = −M y†`.
    pub fn optimal_incentive(&self) -> IncentiveVector {
        IncentiveVector(self.m_times(&self.target_point).iter().map(|v| -v).collect())
    }

    pub fn social_grad_entry(&self, i: usize, t: f64) -> f64 {
        match &self.target {
            SocialTarget::Tracking(z) => t - z[i],
            SocialTarget::Separable(h) => h[i].grad(t),
        }
    }

    pub fn social_hess_entry(&self, i: usize, t: f64) -> f64 {
        match &self.target {
            SocialTarget::Tracking(_) => 1.0,
            SocialTarget::Separable(h) => h[i].hess(t),
        }
    }

    /// `e_i(x) = ∇h_i(x_i) − q_i x_i − α (A x)_i`.
    pub fn externality(&self, x: &[f64]) -> Result<IncentiveVector> {
        self.check_len(x, "strategy profile")?;
        let mx = self.m_times(x);
        Ok(IncentiveVector(
            (0..self.n()).map(|i| self.social_grad_entry(i, x[i]) - mx[i]).collect(),
        ))
    }

    /// Symmetry and positive definiteness of `M`.
    pub fn check_global_conditions(&self) -> GlobalConditionsReport {
        let asym = (&self.m - self.m.transpose()).abs().max();
        let sym_part = (&self.m + self.m.transpose()) * 0.5;
        let min_eigenvalue = sym_part.symmetric_eigenvalues().min();
        let symmetric = asym <= SYMMETRY_TOL;
        let positive_definite = min_eigenvalue > 0.0;
        GlobalConditionsReport {
            symmetric,
            symmetry_defect: asym,
            positive_definite,
            min_eigenvalue,
            passed: symmetric && positive_definite,
        }
    }

    /// Nonnegative `M`, strictly negative off-diagonal `M⁻¹`, nonpositive `y†`.
    pub fn check_local_conditions(&self) -> LocalConditionsReport {
        let n = self.n();
        let inv = self.m_inverse();
        let m_nonnegative = self.m.iter().all(|v| *v >= 0.0);
        let max_inverse_off_diagonal = (0..n)
            .flat_map(|i| (0..n).filter(move |j| *j != i).map(move |j| (i, j)))
            .map(|(i, j)| inv[(i, j)])
            .fold(f64::NEG_INFINITY, f64::max);
        let inverse_off_diagonal_negative = n < 2 || max_inverse_off_diagonal < 0.0;
        let target_nonpositive = self.target_point.iter().all(|v| *v <= 1e-12);
        LocalConditionsReport {
            m_nonnegative,
            inverse_off_diagonal_negative,
            max_inverse_off_diagonal,
            target_nonpositive,
            passed: m_nonnegative && inverse_off_diagonal_negative && target_nonpositive,
        }
    }

    /// `V(p) = (p − p†)ᵀ M⁻ᵀ (p − p†)`.
    pub fn lyapunov_value(&self, p: &[f64]) -> Result<f64> {
        self.check_len(p, "incentive vector")?;
        let d = self.offset_from_optimum(p);
        // dᵀ M⁻ᵀ d = (M⁻¹ d) · d.
        Ok(crate::vecops::dot(&self.solve(&d), &d))
    }

    /// `∇V(p)ᵀ (e(x*(p)) − p)` with `∇V(p) = (M⁻¹ + M⁻ᵀ)(p − p†)`.
    pub fn lyapunov_decrement(&self, p: &[f64]) -> Result<f64> {
        self.check_len(p, "incentive vector")?;
        let d = self.offset_from_optimum(p);
        let a = self.solve(&d);
        let b: Vec<f64> = self
            .lu_transpose
            .solve(&DVector::from_column_slice(&d))
            .expect("Mᵀ is as well conditioned as M")
            .iter()
            .copied()
            .collect();
        let x = self.nash_closed_form(p)?;
        let drift: Vec<f64> = self
            .externality(&x)?
            .iter()
            .zip(p)
            .map(|(e, p)| e - p)
            .collect();
        Ok(a.iter().zip(&b).zip(&drift).map(|((u, v), w)| (u + v) * w).sum())
    }

    fn offset_from_optimum(&self, p: &[f64]) -> Vec<f64> {
        let opt = self.optimal_incentive();
        p.iter().zip(opt.iter()).map(|(a, b)| a - b).collect()
    }

    /// Spectral test of the scaled-limit dynamics `ẋ = f_∞(x, p)`. For the
    /// affine rules `f_∞(x, p) = (L − I) x + K p` where `L` is the linear part
    /// of the rule, so global stability reduces to the eigenvalues of `L − I`.
    pub fn check_scaled_limit(&self, rule: &StrategyUpdateRule) -> ScaledLimitReport {
        let n = self.n();
        let lipschitz_bound = self.m.norm();
        let drift = match *rule {
            StrategyUpdateRule::Equilibrium => -DMatrix::identity(n, n),
            StrategyUpdateRule::BestResponse => {
                let q_inv = DMatrix::from_diagonal(&DVector::from_iterator(n, self.q.iter().map(|v| 1.0 / v)));
                -(q_inv * &self.m)
            }
            StrategyUpdateRule::Gradient {
                regularizer: Regularizer::Entropy,
                ..
            } => {
                return ScaledLimitReport {
                    verdict: ScaledLimitVerdict::NotVerifiable,
                    max_real_eigenvalue: None,
                    passed: None,
                }
            }
            StrategyUpdateRule::Gradient { step, lipschitz, .. } => {
                let eta = step.unwrap_or_else(|| 0.9 / lipschitz.unwrap_or(lipschitz_bound));
                -(&self.m * eta)
            }
        };
        let max_re = drift
            .complex_eigenvalues()
            .iter()
            .map(|z| z.re)
            .fold(f64::NEG_INFINITY, f64::max);
        let passed = max_re < 0.0;
        ScaledLimitReport {
            verdict: if passed {
                ScaledLimitVerdict::Pass
            } else {
                ScaledLimitVerdict::Fail
            },
            max_real_eigenvalue: Some(max_re),
            passed: Some(passed),
        }
    }
}

impl Serialize for AggregativeGame {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_json_spec().serialize(s)
    }
}

impl<'de> Deserialize<'de> for AggregativeGame {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let spec = AggregativeSpecJson::deserialize(d)?;
        AggregativeGame::from_json_spec(spec).map_err(serde::de::Error::custom)
    }
}

impl AtomicGame for AggregativeGame {
    fn n_players(&self) -> usize {
        self.n()
    }

    fn bounds(&self, _i: usize) -> Interval {
        Interval::real_line()
    }

    fn player_cost(&self, x: &[f64], i: usize) -> Result<f64> {
        self.check_len(x, "strategy profile")?;
        let ax: f64 = (0..self.n()).map(|j| self.coupling[(i, j)] * x[j]).sum();
        Ok(0.5 * self.q[i] * x[i] * x[i] + self.alpha * x[i] * ax)
    }

    fn player_cost_partial(&self, x: &[f64], i: usize) -> Result<f64> {
        self.check_len(x, "strategy profile")?;
        let ax: f64 = (0..self.n()).map(|j| self.coupling[(i, j)] * x[j]).sum();
        Ok(self.q[i] * x[i] + self.alpha * ax)
    }

    fn social_cost(&self, x: &[f64]) -> Result<f64> {
        self.check_len(x, "strategy profile")?;
        Ok(match &self.target {
            SocialTarget::Tracking(z) => x.iter().zip(z).map(|(a, b)| 0.5 * (a - b).powi(2)).sum(),
            SocialTarget::Separable(h) => x.iter().zip(h).map(|(a, t)| t.value(*a)).sum(),
        })
    }

    fn social_cost_gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_len(x, "strategy profile")?;
        Ok((0..self.n()).map(|i| self.social_grad_entry(i, x[i])).collect())
    }

    fn nash_equilibrium(&self, p: &[f64], _warm: &[f64], _opts: SolverOptions) -> Result<Vec<f64>> {
        Ok(self.nash_closed_form(p)?.into_inner())
    }

    /// `−(α (A x)_i + p_i) / q_i`.
    fn best_response(&self, x: &[f64], p: &[f64], i: usize, _tol: f64) -> Result<f64> {
        self.check_len(x, "strategy profile")?;
        self.check_len(p, "incentive vector")?;
        let ax: f64 = (0..self.n()).map(|j| self.coupling[(i, j)] * x[j]).sum();
        Ok(-(self.alpha * ax + p[i]) / self.q[i])
    }

    fn social_optimum(&self, _opts: SolverOptions) -> Result<Vec<f64>> {
        Ok(self.target_point.clone())
    }

    fn game_lipschitz(&self, _x: &[f64]) -> Result<f64> {
        Ok(self.m.norm())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GlobalConditionsReport {
    pub symmetric: bool,
    pub symmetry_defect: f64,
    pub positive_definite: bool,
    /// Smallest eigenvalue of the symmetric part of `M`.
    pub min_eigenvalue: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LocalConditionsReport {
    pub m_nonnegative: bool,
    pub inverse_off_diagonal_negative: bool,
    pub max_inverse_off_diagonal: f64,
    pub target_nonpositive: bool,
    pub passed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ScaledLimitVerdict {
    Pass,
    Fail,
    NotVerifiable,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScaledLimitReport {
    pub verdict: ScaledLimitVerdict,
    pub max_real_eigenvalue: Option<f64>,
    pub passed: Option<bool>,
}
