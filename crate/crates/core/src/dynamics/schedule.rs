use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Polynomially decaying two-timescale step sizes
/// `γ_k = γ₀ (k + k₀)^(−a)` (strategies) and `β_k = β₀ (k + k₀)^(−b)` (incentives).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ScheduleParams", into = "ScheduleParams")]
pub struct StepSchedule {
    a: f64,
    b: f64,
    gamma0: f64,
    beta0: f64,
    offset: u64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScheduleParams {
    #[serde(default = "defaults::a")]
    a: f64,
    #[serde(default = "defaults::b")]
    b: f64,
    #[serde(default = "defaults::scale")]
    gamma0: f64,
    #[serde(default = "defaults::scale")]
    beta0: f64,
    #[serde(default = "defaults::offset")]
    offset: u64,
}

mod defaults {
    pub fn a() -> f64 {
        0.6
    }
    pub fn b() -> f64 {
        0.9
    }
    pub fn scale() -> f64 {
        1.0
    }
    pub fn offset() -> u64 {
        2
    }
}

impl TryFrom<ScheduleParams> for StepSchedule {
    type Error = Error;
    fn try_from(s: ScheduleParams) -> Result<Self> {
        StepSchedule::new(s.a, s.b, s.gamma0, s.beta0, s.offset)
    }
}

impl From<StepSchedule> for ScheduleParams {
    fn from(s: StepSchedule) -> Self {
        ScheduleParams {
            a: s.a,
            b: s.b,
            gamma0: s.gamma0,
            beta0: s.beta0,
            offset: s.offset,
        }
    }
}

impl Default for StepSchedule {
    fn default() -> Self {
        StepSchedule::new(0.6, 0.9, 1.0, 1.0, 2).expect("default schedule is admissible")
    }
}

impl StepSchedule {
    /// Requires `0.5 < a < b ≤ 1`, positive scales, `k₀ ≥ 1` and both step
    /// sequences inside `(0, 1)` from `k = 0` on.
    pub fn new(a: f64, b: f64, gamma0: f64, beta0: f64, offset: u64) -> Result<Self> {
        if !(0.5 < a && a < b && b <= 1.0) {
            return Err(Error::invalid_argument(format!(
                "step exponents must satisfy 0.5 < a < b <= 1, got a = {a}, b = {b}"
            )));
        }
        if !(gamma0 > 0.0 && gamma0.is_finite() && beta0 > 0.0 && beta0.is_finite()) {
            return Err(Error::invalid_argument("step scales must be positive and finite"));
        }
        if offset == 0 {
            return Err(Error::invalid_argument("step offset must be at least 1"));
        }
        let s = StepSchedule {
            a,
            b,
            gamma0,
            beta0,
            offset,
        };
        // Both sequences decrease in k, so k = 0 is the binding case.
        if s.gamma(0) >= 1.0 || s.beta(0) >= 1.0 {
            return Err(Error::invalid_argument(format!(
                "initial steps must lie in (0, 1), got gamma_0 = {}, beta_0 = {}",
                s.gamma(0),
                s.beta(0)
            )));
        }
        Ok(s)
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn gamma0(&self) -> f64 {
        self.gamma0
    }

    pub fn beta0(&self) -> f64 {
        self.beta0
    }

    pub fn offset(&self) -> u64 {
        self.offset
    }

    /// Fast (strategy) step at iteration `k`.
    pub fn gamma(&self, k: u64) -> f64 {
        self.gamma0 * ((k + self.offset) as f64).powf(-self.a)
    }

    /// Slow (incentive) step at iteration `k`.
    pub fn beta(&self, k: u64) -> f64 {
        self.beta0 * ((k + self.offset) as f64).powf(-self.b)
    }

    /// Symbolic check of the summability and separation requirements,
    /// decided from the exponents alone.
    pub fn assumption_report(&self) -> ScheduleReport {
        ScheduleReport {
            fast_sum_diverges: self.a <= 1.0,
            slow_sum_diverges: self.b <= 1.0,
            squares_summable: 2.0 * self.a > 1.0 && 2.0 * self.b > 1.0,
            ratio_vanishes: self.b > self.a,
            ratio_nonincreasing: self.b >= self.a,
            steps_in_unit_interval: self.gamma(0) < 1.0 && self.beta(0) < 1.0,
        }
    }
}

/// Clause-by-clause verdict on a [`StepSchedule`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ScheduleReport {
    /// `Σ γ_k = ∞` iff `a ≤ 1`.
    pub fast_sum_diverges: bool,
    /// `Σ β_k = ∞` iff `b ≤ 1`.
    pub slow_sum_diverges: bool,
    /// `Σ (γ_k² + β_k²) < ∞` iff `2a > 1` and `2b > 1`.
    pub squares_summable: bool,
    /// `β_k / γ_k = (β₀/γ₀)(k + k₀)^(a − b) → 0` iff `b > a`.
    pub ratio_vanishes: bool,
    pub ratio_nonincreasing: bool,
    pub steps_in_unit_interval: bool,
}

impl ScheduleReport {
    pub fn all_hold(&self) -> bool {
        self.fast_sum_diverges
            && self.slow_sum_diverges
            && self.squares_summable
            && self.ratio_vanishes
            && self.ratio_nonincreasing
            && self.steps_in_unit_interval
    }
}
