//! Sample sizes for the Gaussian trace estimator.
//!
//! Given a relative accuracy `eps` and failure probability `delta`, these
//! functions find the number of probe vectors `n` for which
//!
//! * lower side: `Pr(tr_n(A) >= (1 - eps) tr(A)) >= 1 - delta`,
//! * upper side: `Pr(tr_n(A) <= (1 + eps) tr(A)) >= 1 - delta`,
//! * two-sided: both at once.
//!
//! The sufficient sizes hold for every SPSD matrix. The necessary sizes take
//! the rank `r` of the matrix and are exact when its nonzero eigenvalues are
//! equal. All of them are found by scanning `n` upward and evaluating the CDF
//! of `Q(n r)`, the scaled chi-squared variable; nothing is inverted.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::scaled_chi2_cdf;

/// Default upper end of every sample-size scan.
pub const DEFAULT_SCAN_LIMIT: u64 = 1_000_000;

/// Relative accuracy `eps` and failure probability `delta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToleranceBudget {
    eps: f64,
    delta: f64,
}

impl ToleranceBudget {
    pub fn new(eps: f64, delta: f64) -> Result<Self> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::Domain(format!("eps must lie in (0, 1), got {eps}")));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::Domain(format!("delta must lie in (0, 1), got {delta}")));
        }
        Ok(Self { eps, delta })
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    Sufficient,
    Necessary,
}

/// Which probabilistic inequality a sample size is meant to satisfy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Lower,
    Upper,
    TwoSided,
}

impl std::str::FromStr for Side {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lower" => Ok(Side::Lower),
            "upper" => Ok(Side::Upper),
            "two_sided" | "two-sided" => Ok(Side::TwoSided),
            other => Err(Error::Parse(format!("unknown side {other:?}"))),
        }
    }
}

impl std::fmt::Display for Side {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Side::Lower => "lower",
            Side::Upper => "upper",
            Side::TwoSided => "two_sided",
        })
    }
}

/// Outcome of a sample-size scan.
///
/// `n` is `None` when no `n` up to `scan_limit` qualifies. For the upper and
/// two-sided sides only `n > floor(1/eps)` is ever reported.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleSizeResult {
    pub n: Option<u64>,
    pub kind: BoundKind,
    pub side: Side,
    pub rank_used: Option<u64>,
    pub scan_start: u64,
    pub scan_limit: u64,
    /// `eps^-2 r^-2`; beyond it the probability is monotone in `n`, so every
    /// larger sample size qualifies too. Zero for the lower side, which is
    /// monotone from `n = 1`.
    pub monotone_threshold: f64,
}

impl SampleSizeResult {
    /// Whether the reported `n` lies where qualification is known to persist
    /// for all larger `n`.
    pub fn in_monotone_regime(&self) -> bool {
        match self.n {
            Some(n) => n as f64 > self.monotone_threshold,
            None => false,
        }
    }

    /// The `(n0, eps^-2 r^-2, qualifying)` triple describing the candidate
    /// for the regime where `n0` is both necessary and sufficient.
    pub fn regime_triple(&self) -> (Option<u64>, f64, bool) {
        (self.n, self.monotone_threshold, self.in_monotone_regime())
    }
}

/// `Pr(Q(n r) < 1 - eps)`: the probability that `n` probes underestimate the
/// trace of an equal-eigenvalue rank-`r` matrix by more than `eps`.
pub fn lower_failure_prob(eps: f64, n: u64, r: u64) -> Result<f64> {
    scaled_chi2_cdf(n * r, 1.0 - eps)
}

/// `Pr(Q(n r) <= 1 + eps)`.
pub fn upper_success_prob(eps: f64, n: u64, r: u64) -> Result<f64> {
    scaled_chi2_cdf(n * r, 1.0 + eps)
}

/// `Pr(1 - eps <= Q(n r) <= 1 + eps)`.
pub fn two_sided_success_prob(eps: f64, n: u64, r: u64) -> Result<f64> {
    Ok(upper_success_prob(eps, n, r)? - lower_failure_prob(eps, n, r)?)
}

/// Smallest `n` with `n > 8 eps^-2 ln(1/delta)`, the classical bound.
pub fn loose_sufficient(t: ToleranceBudget) -> u64 {
    let c = (1.0 / t.delta).ln() / (t.eps * t.eps);
    (8.0 * c).floor() as u64 + 1
}

/// First `n` of an upper or two-sided scan: `floor(1/eps) + 1`.
pub fn upper_scan_start(eps: f64) -> u64 {
    (1.0 / eps).floor() as u64 + 1
}

fn scan(start: u64, limit: u64, mut qualifies: impl FnMut(u64) -> Result<bool>) -> Result<Option<u64>> {
    for n in start..=limit {
        if qualifies(n)? {
            return Ok(Some(n));
        }
    }
    Ok(None)
}

fn check_scan(r: u64, scan_limit: u64) -> Result<()> {
    if r == 0 {
        return Err(Error::Domain("rank must be at least 1".into()));
    }
    if scan_limit == 0 {
        return Err(Error::Domain("scan limit must be at least 1".into()));
    }
    Ok(())
}

fn result(
    n: Option<u64>,
    kind: BoundKind,
    side: Side,
    r: u64,
    scan_start: u64,
    scan_limit: u64,
    eps: f64,
) -> SampleSizeResult {
    let monotone_threshold = match side {
        Side::Lower => 0.0,
        Side::Upper | Side::TwoSided => 1.0 / (eps * eps * (r * r) as f64),
    };
    SampleSizeResult {
        n,
        kind,
        side,
        rank_used: match kind {
            BoundKind::Sufficient => None,
            BoundKind::Necessary => Some(r),
        },
        scan_start,
        scan_limit,
        monotone_threshold,
    }
}

fn lower(t: ToleranceBudget, r: u64, scan_limit: u64, kind: BoundKind) -> Result<SampleSizeResult> {
    check_scan(r, scan_limit)?;
    let n = scan(1, scan_limit, |n| Ok(lower_failure_prob(t.eps, n, r)? <= t.delta))?;
    Ok(result(n, kind, Side::Lower, r, 1, scan_limit, t.eps))
}

fn upper(t: ToleranceBudget, r: u64, scan_limit: u64, kind: BoundKind) -> Result<SampleSizeResult> {
    check_scan(r, scan_limit)?;
    let start = upper_scan_start(t.eps);
    let n = scan(start, scan_limit, |n| Ok(upper_success_prob(t.eps, n, r)? >= 1.0 - t.delta))?;
    Ok(result(n, kind, Side::Upper, r, start, scan_limit, t.eps))
}

fn two_sided(t: ToleranceBudget, r: u64, scan_limit: u64, kind: BoundKind) -> Result<SampleSizeResult> {
    check_scan(r, scan_limit)?;
    let start = upper_scan_start(t.eps);
    let n = scan(start, scan_limit, |n| Ok(two_sided_success_prob(t.eps, n, r)? >= 1.0 - t.delta))?;
    Ok(result(n, kind, Side::TwoSided, r, start, scan_limit, t.eps))
}

/// Smallest `n` with `Pr(Q(n) < 1 - eps) <= delta`. Valid for any SPSD matrix
/// and, once reached, for every larger `n`.
pub fn sufficient_lower(t: ToleranceBudget, scan_limit: u64) -> Result<SampleSizeResult> {
    lower(t, 1, scan_limit, BoundKind::Sufficient)
}

/// Smallest `n` with `Pr(Q(n r) < 1 - eps) <= delta`. No smaller `n` can give
/// the lower guarantee for a rank-`r` matrix.
pub fn necessary_lower(t: ToleranceBudget, r: u64, scan_limit: u64) -> Result<SampleSizeResult> {
    lower(t, r, scan_limit, BoundKind::Necessary)
}

/// Smallest `n > floor(1/eps)` with `Pr(Q(n) <= 1 + eps) >= 1 - delta`.
pub fn sufficient_upper(t: ToleranceBudget, scan_limit: u64) -> Result<SampleSizeResult> {
    upper(t, 1, scan_limit, BoundKind::Sufficient)
}

/// Rank-`r` analogue of [`sufficient_upper`].
pub fn necessary_upper(t: ToleranceBudget, r: u64, scan_limit: u64) -> Result<SampleSizeResult> {
    upper(t, r, scan_limit, BoundKind::Necessary)
}

/// Smallest `n > floor(1/eps)` with `Pr(1 - eps <= Q(n) <= 1 + eps) >= 1 - delta`.
pub fn sufficient_two_sided(t: ToleranceBudget, scan_limit: u64) -> Result<SampleSizeResult> {
    two_sided(t, 1, scan_limit, BoundKind::Sufficient)
}

/// Rank-`r` analogue of [`sufficient_two_sided`].
pub fn necessary_two_sided(t: ToleranceBudget, r: u64, scan_limit: u64) -> Result<SampleSizeResult> {
    two_sided(t, r, scan_limit, BoundKind::Necessary)
}

/// Dispatch on `side` for the sufficient bounds.
pub fn sufficient(t: ToleranceBudget, side: Side, scan_limit: u64) -> Result<SampleSizeResult> {
    match side {
        Side::Lower => sufficient_lower(t, scan_limit),
        Side::Upper => sufficient_upper(t, scan_limit),
        Side::TwoSided => sufficient_two_sided(t, scan_limit),
    }
}

/// Dispatch on `side` for the necessary bounds.
pub fn necessary(t: ToleranceBudget, side: Side, r: u64, scan_limit: u64) -> Result<SampleSizeResult> {
    match side {
        Side::Lower => necessary_lower(t, r, scan_limit),
        Side::Upper => necessary_upper(t, r, scan_limit),
        Side::TwoSided => necessary_two_sided(t, r, scan_limit),
    }
}
