use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Bounded conductivity parametrization
/// `mu = mu_min + (mu_max - mu_min) / (1 + exp(-m))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transfer {
    pub mu_min: f64,
    pub mu_max: f64,
}

impl Transfer {
    pub fn new(mu_min: f64, mu_max: f64) -> Result<Self> {
        if !(mu_min > 0.0 && mu_max > mu_min && mu_max.is_finite()) {
            return Err(Error::Domain(format!("need 0 < mu_min < mu_max, got ({mu_min}, {mu_max})")));
        }
        Ok(Self { mu_min, mu_max })
    }

    /// Bounds `0.83 min(mu)` and `1.2 max(mu)` around a reference conductivity.
    pub fn from_reference(mu: &[f64]) -> Result<Self> {
        let lo = mu.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = mu.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Self::new(0.83 * lo, 1.2 * hi)
    }

    fn logistic(m: f64) -> f64 {
        if m >= 0.0 {
            1.0 / (1.0 + (-m).exp())
        } else {
            let e = m.exp();
            e / (1.0 + e)
        }
    }

    pub fn psi(&self, m: f64) -> f64 {
        self.mu_min + (self.mu_max - self.mu_min) * Self::logistic(m)
    }

    pub fn dpsi(&self, m: f64) -> f64 {
        let s = Self::logistic(m);
        (self.mu_max - self.mu_min) * s * (1.0 - s)
    }

    /// Model value mapping to `mu`, which must lie strictly inside the bounds.
    pub fn inverse(&self, mu: f64) -> Result<f64> {
        if !(mu > self.mu_min && mu < self.mu_max) {
            return Err(Error::Domain(format!("conductivity {mu} outside ({}, {})", self.mu_min, self.mu_max)));
        }
        Ok(((mu - self.mu_min) / (self.mu_max - mu)).ln())
    }

    pub fn apply(&self, m: &[f64]) -> Vec<f64> {
        m.iter().map(|&v| self.psi(v)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn limits_and_midpoint() {
        let t = Transfer::new(0.083, 1.2).unwrap();
        assert_abs_diff_eq!(t.psi(-800.0), 0.083, epsilon = 1e-15);
        assert_abs_diff_eq!(t.psi(800.0), 1.2, epsilon = 1e-15);
        assert_abs_diff_eq!(t.psi(0.0), (0.083 + 1.2) / 2.0, epsilon = 1e-15);
        assert!(t.psi(-30.0) > 0.083 - 1e-15);
    }

    #[test]
    fn derivative_matches_central_differences() {
        let t = Transfer::new(0.083, 1.2).unwrap();
        for &m in &[-2.0, 0.0, 2.0] {
            let h = 1e-5;
            let fd = (t.psi(m + h) - t.psi(m - h)) / (2.0 * h);
            assert_abs_diff_eq!(t.dpsi(m), fd, epsilon = 1e-8);
            assert!(t.dpsi(m) > 0.0);
        }
    }

    #[test]
    fn inverse_round_trip() {
        let t = Transfer::from_reference(&[0.1, 1.0]).unwrap();
        assert_abs_diff_eq!(t.mu_min, 0.083, epsilon = 1e-15);
        assert_abs_diff_eq!(t.mu_max, 1.2, epsilon = 1e-15);
        for &mu in &[0.1, 0.5, 1.0] {
            assert_abs_diff_eq!(t.psi(t.inverse(mu).unwrap()), mu, epsilon = 1e-14);
        }
        assert!(t.inverse(1.2).is_err());
        assert!(Transfer::new(1.0, 0.5).is_err());
    }
}
