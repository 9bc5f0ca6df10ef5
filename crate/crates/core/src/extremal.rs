//! Orderings of normalized gamma CDFs.
//!
//! For `X_i ~ Gamma(alpha_i, alpha_i)` with `alpha_1 < alpha_2` the CDF
//! difference `Pr(X_2 < x) - Pr(X_1 < x)` is negative up to a unique crossing
//! point in `[1, 1 + 1/(2 sqrt(alpha_1 (alpha_2 - alpha_1)))]` and positive
//! after it. For i.i.d. gammas weighted by a point of the probability simplex,
//! the CDF of the weighted sum is extremal at the uniform weights and at a
//! corner, except on a band around the mean where no closed form is known.
//! The Monte-Carlo estimator here checks both statements empirically.

use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::stream_rng;
use crate::special::{gamma_cdf, GammaParams};

/// Point of the probability simplex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimplexWeights {
    lambdas: Vec<f64>,
}

impl SimplexWeights {
    pub fn new(lambdas: Vec<f64>) -> Result<Self> {
        if lambdas.is_empty() {
            return Err(Error::Domain("simplex weights must be non-empty".into()));
        }
        if lambdas.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
            return Err(Error::Domain("simplex weights must be nonnegative".into()));
        }
        let total: f64 = lambdas.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Domain(format!("simplex weights sum to {total}, not 1")));
        }
        Ok(Self { lambdas })
    }

    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Domain("simplex dimension must be at least 1".into()));
        }
        Ok(Self { lambdas: vec![1.0 / n as f64; n] })
    }

    pub fn corner(n: usize, i: usize) -> Result<Self> {
        if i >= n {
            return Err(Error::Domain(format!("corner {i} outside simplex of dimension {n}")));
        }
        let mut lambdas = vec![0.0; n];
        lambdas[i] = 1.0;
        Ok(Self { lambdas })
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }
}

/// All simplex points whose coordinates are multiples of `1/steps`.
pub fn simplex_grid(n: usize, steps: usize) -> Vec<SimplexWeights> {
    fn rec(n: usize, left: usize, steps: usize, cur: &mut Vec<usize>, out: &mut Vec<SimplexWeights>) {
        if cur.len() == n - 1 {
            cur.push(left);
            let lambdas = cur.iter().map(|&k| k as f64 / steps as f64).collect::<Vec<_>>();
            // exact multiples of 1/steps can miss the unit sum by a few ulps
            let total: f64 = lambdas.iter().sum();
            let lambdas = lambdas.iter().map(|l| l / total).collect();
            out.push(SimplexWeights { lambdas });
            cur.pop();
            return;
        }
        for k in (0..=left).rev() {
            cur.push(k);
            rec(n, left - k, steps, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if n == 0 || steps == 0 {
        return out;
    }
    rec(n, steps, steps, &mut Vec::with_capacity(n), &mut out);
    out
}

fn check_alphas(alpha1: f64, alpha2: f64) -> Result<()> {
    if !(alpha1 > 0.0 && alpha1 < alpha2 && alpha2.is_finite()) {
        return Err(Error::Domain(format!("need 0 < alpha1 < alpha2, got ({alpha1}, {alpha2})")));
    }
    Ok(())
}

/// `Pr(X_2 < x) - Pr(X_1 < x)` with `X_i ~ Gamma(alpha_i, alpha_i)`.
pub fn delta_cdf(alpha1: f64, alpha2: f64, x: f64) -> Result<f64> {
    check_alphas(alpha1, alpha2)?;
    let f2 = gamma_cdf(GammaParams::new(alpha2, alpha2)?, x)?;
    let f1 = gamma_cdf(GammaParams::new(alpha1, alpha1)?, x)?;
    Ok(f2 - f1)
}

/// Crossing point of two normalized gamma CDFs with its theoretical bracket.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossingPoint {
    pub x_star: f64,
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub alpha1: f64,
    pub alpha2: f64,
}

/// `1 + 1 / (2 sqrt(alpha1 (alpha2 - alpha1)))`
pub fn crossing_upper_bound(alpha1: f64, alpha2: f64) -> f64 {
    let s = 2.0 * (alpha1 * (alpha2 - alpha1)).sqrt();
    (s + 1.0) / s
}

/// Locate the sign change of [`delta_cdf`] by bisection on the theoretical
/// bracket, widened a little if rounding leaves equal signs at its ends.
pub fn crossing_point(alpha1: f64, alpha2: f64, tol: f64) -> Result<CrossingPoint> {
    check_alphas(alpha1, alpha2)?;
    if !(tol > 0.0) {
        return Err(Error::Domain(format!("tolerance must be positive, got {tol}")));
    }
    let ub = crossing_upper_bound(alpha1, alpha2);
    let d = |x: f64| delta_cdf(alpha1, alpha2, x);
    let mut lo = 1.0;
    let mut hi = ub;
    let mut dlo = d(lo)?;
    let mut dhi = d(hi)?;
    let margin = 1e-6 * ub;
    for _ in 0..8 {
        if dlo <= 0.0 && dhi >= 0.0 {
            break;
        }
        if dlo > 0.0 {
            lo = (lo - margin).max(f64::MIN_POSITIVE);
            dlo = d(lo)?;
        }
        if dhi < 0.0 {
            hi += margin;
            dhi = d(hi)?;
        }
    }
    if !(dlo <= 0.0 && dhi >= 0.0) {
        return Err(Error::Numerical(format!(
            "no sign change of the CDF difference on [{lo}, {hi}] (alpha1={alpha1}, alpha2={alpha2})"
        )));
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let dm = d(mid)?;
        if dm == 0.0 {
            lo = mid;
            hi = mid;
            break;
        }
        if dm < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let x_star = (0.5 * (lo + hi)).clamp(1.0, ub);
    Ok(CrossingPoint { x_star, lower_bound: 1.0, upper_bound: ub, alpha1, alpha2 })
}

/// Minimum and maximum over the simplex of `Pr(sum lambda_i X_i < x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "regime", rename_all = "snake_case")]
pub enum Envelope {
    Determinate {
        min: f64,
        max: f64,
    },
    /// `x` lies in `[alpha/beta, (2 alpha + 1)/(2 beta)]`, where no closed
    /// form is available.
    Indeterminate,
}

/// Closed-form envelope for i.i.d. `Gamma(alpha, beta)` summands.
pub fn extremal_envelope(p: GammaParams, n: usize, x: f64) -> Result<Envelope> {
    if n == 0 {
        return Err(Error::Domain("envelope needs n >= 1".into()));
    }
    if x.is_nan() || x < 0.0 {
        return Err(Error::Domain(format!("envelope needs x >= 0, got {x}")));
    }
    let single = gamma_cdf(p, x)?;
    if n == 1 {
        return Ok(Envelope::Determinate { min: single, max: single });
    }
    let nf = n as f64;
    let mean = gamma_cdf(GammaParams::new(nf * p.shape(), nf * p.rate())?, x)?;
    let low_edge = p.shape() / p.rate();
    let high_edge = (2.0 * p.shape() + 1.0) / (2.0 * p.rate());
    if x < low_edge {
        Ok(Envelope::Determinate { min: mean, max: single })
    } else if x > high_edge {
        Ok(Envelope::Determinate { min: single, max: mean })
    } else {
        Ok(Envelope::Indeterminate)
    }
}

/// Monte-Carlo CDF estimate with its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub std_error: f64,
}

/// Empirical `Pr(sum lambda_i X_i < x)` from `samples` draws, `X_i` i.i.d.
/// `Gamma(shape, rate)`.
///
/// Gamma variates come from `rand_distr::Gamma` (Marsaglia and Tsang's
/// squeeze method, with the `U^{1/alpha}` boost for shapes below one).
pub fn simplex_cdf_mc(p: GammaParams, w: &SimplexWeights, x: f64, samples: usize, seed: u64) -> Result<McEstimate> {
    if samples < 10_000 {
        return Err(Error::Domain(format!("need at least 10^4 samples, got {samples}")));
    }
    let gamma = Gamma::new(p.shape(), 1.0 / p.rate()).map_err(|e| Error::Domain(format!("gamma sampler: {e}")))?;
    let mut rng = stream_rng(seed, 0);
    let mut hits = 0usize;
    for _ in 0..samples {
        let mut sum = 0.0;
        for &l in w.lambdas() {
            let g: f64 = gamma.sample(&mut rng);
            if l != 0.0 {
                sum += l * g;
            }
        }
        if sum < x {
            hits += 1;
        }
    }
    let est = hits as f64 / samples as f64;
    let se = (est * (1.0 - est) / samples as f64).sqrt();
    Ok(McEstimate { estimate: est, std_error: se })
}
