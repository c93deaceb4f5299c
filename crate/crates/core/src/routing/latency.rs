use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Polynomial edge latency `l(w) = Σ_k c_k w^k` with nonnegative coefficients,
/// hence nondecreasing and convex on `w ≥ 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Latency {
    coeffs: Vec<f64>,
}

impl TryFrom<Vec<f64>> for Latency {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Latency::new(v)
    }
}

impl From<Latency> for Vec<f64> {
    fn from(l: Latency) -> Self {
        l.coeffs
    }
}

impl Latency {
    pub fn new(mut coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::invalid_spec("a latency polynomial needs at least one coefficient"));
        }
        if let Some(c) = coeffs.iter().find(|c| !(**c >= 0.0 && c.is_finite())) {
            return Err(Error::invalid_spec(format!(
                "latency coefficients must be finite and nonnegative, got {c}"
            )));
        }
        while coeffs.len() > 1 && *coeffs.last().unwrap() == 0.0 {
            coeffs.pop();
        }
        Ok(Latency { coeffs })
    }

    pub fn affine(constant: f64, slope: f64) -> Self {
        Latency::new(vec![constant, slope]).expect("affine latency with nonnegative coefficients")
    }

    pub fn constant(c: f64) -> Self {
        Latency::new(vec![c]).expect("nonnegative constant latency")
    }

    /// `c₀ + c_d w^d`, the BPR shape.
    pub fn monomial(constant: f64, scale: f64, degree: usize) -> Result<Self> {
        let mut c = vec![0.0; degree + 1];
        c[0] = constant;
        c[degree] += scale;
        Latency::new(c)
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Strictly increasing on `w ≥ 0` iff some coefficient of degree ≥ 1 is positive.
    pub fn is_strictly_increasing(&self) -> bool {
        self.coeffs.iter().skip(1).any(|c| *c > 0.0)
    }

    fn horner(coeffs: impl DoubleEndedIterator<Item = f64>, w: f64) -> f64 {
        coeffs.rev().fold(0.0, |acc, c| acc * w + c)
    }

    pub fn value(&self, w: f64) -> f64 {
        Self::horner(self.coeffs.iter().copied(), w)
    }

    pub fn derivative(&self, w: f64) -> f64 {
        Self::horner(self.coeffs.iter().enumerate().skip(1).map(|(k, c)| k as f64 * c), w)
    }

    pub fn second_derivative(&self, w: f64) -> f64 {
        Self::horner(
            self.coeffs
                .iter()
                .enumerate()
                .skip(2)
                .map(|(k, c)| (k * (k - 1)) as f64 * c),
            w,
        )
    }

    /// `∫₀^w l(τ) dτ`.
    pub fn integral(&self, w: f64) -> f64 {
        w * Self::horner(
            self.coeffs.iter().enumerate().map(|(k, c)| c / (k + 1) as f64),
            w,
        )
    }

    /// Marginal social cost `l(w) + w l'(w)`.
    pub fn marginal(&self, w: f64) -> f64 {
        self.value(w) + w * self.derivative(w)
    }

    /// Externality `w l'(w)`.
    pub fn externality(&self, w: f64) -> f64 {
        w * self.derivative(w)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn derivatives_of_bpr() {
        let l = Latency::monomial(1.0, 1.0, 4).unwrap();
        assert_eq!(l.value(1.0), 2.0);
        assert_eq!(l.derivative(1.0), 4.0);
        assert_eq!(l.second_derivative(1.0), 12.0);
        assert_abs_diff_eq!(l.integral(2.0), 2.0 + 32.0 / 5.0, epsilon = 1e-14);
        assert_eq!(l.marginal(1.0), 6.0);
    }

    #[test]
    fn constant_is_not_strict() {
        assert!(!Latency::constant(1.0).is_strictly_increasing());
        assert!(Latency::affine(0.25, 0.01).is_strictly_increasing());
        assert_eq!(Latency::constant(1.0).derivative(3.0), 0.0);
        assert!(Latency::new(vec![1.0, -1.0]).is_err());
        assert_eq!(Latency::new(vec![1.0, 0.0, 0.0]).unwrap().degree(), 0);
    }

    #[test]
    fn json_is_coefficient_list() {
        let l: Latency = serde_json::from_str("[0.25, 0.01]").unwrap();
        assert_eq!(l, Latency::affine(0.25, 0.01));
        assert_eq!(serde_json::to_string(&l).unwrap(), "[0.25,0.01]");
    }
}
