//! Matrix-free Gaussian trace estimation.
//!
//! `tr_n(A) = (1/n) sum_j w_j^T A w_j` with `w_j ~ N(0, I)`, for a symmetric
//! positive semi-definite `A` reachable only through products `v -> A v`.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{self, Side, ToleranceBudget, DEFAULT_SCAN_LIMIT};
use crate::error::{Error, Result};
use crate::linalg::{dot, norm};
use crate::rng::{fill_normal, stream_rng};

type ApplyFn = dyn Fn(&[f64]) -> Vec<f64> + Send + Sync;

/// An SPSD operator known only through matrix-vector products.
pub struct ImplicitSpsdOperator {
    dim: usize,
    apply: Box<ApplyFn>,
    rank_hint: Option<u64>,
    true_trace: Option<f64>,
    concurrent_apply: bool,
}

impl std::fmt::Debug for ImplicitSpsdOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ImplicitSpsdOperator")
            .field("dim", &self.dim)
            .field("rank_hint", &self.rank_hint)
            .field("true_trace", &self.true_trace)
            .finish_non_exhaustive()
    }
}

impl ImplicitSpsdOperator {
    /// `apply` must be safe to call from several threads at once; trials of
    /// [`empirical_coverage`] run in parallel unless
    /// [`Self::serial_only`] is set.
    pub fn new(dim: usize, apply: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static) -> Self {
        Self { dim, apply: Box::new(apply), rank_hint: None, true_trace: None, concurrent_apply: true }
    }

    pub fn with_rank_hint(mut self, r: u64) -> Self {
        self.rank_hint = Some(r);
        self
    }

    pub fn with_true_trace(mut self, t: f64) -> Self {
        self.true_trace = Some(t);
        self
    }

    /// Declare that `apply` must not run concurrently.
    pub fn serial_only(mut self) -> Self {
        self.concurrent_apply = false;
        self
    }

    /// Dense symmetric matrix stored row-major.
    pub fn from_dense(dim: usize, a: Vec<f64>) -> Result<Self> {
        if a.len() != dim * dim {
            return Err(Error::Dimension(format!("dense matrix has {} entries, expected {}", a.len(), dim * dim)));
        }
        let trace = (0..dim).map(|i| a[i * dim + i]).sum();
        Ok(Self::new(dim, move |v| (0..dim).map(|i| dot(&a[i * dim..(i + 1) * dim], v)).collect())
            .with_true_trace(trace))
    }

    pub fn diagonal(d: Vec<f64>) -> Self {
        let trace = d.iter().sum();
        let rank = d.iter().filter(|x| **x != 0.0).count() as u64;
        let dim = d.len();
        Self::new(dim, move |v| v.iter().zip(&d).map(|(x, y)| x * y).collect())
            .with_true_trace(trace)
            .with_rank_hint(rank.max(1))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank_hint(&self) -> Option<u64> {
        self.rank_hint
    }

    pub fn true_trace(&self) -> Option<f64> {
        self.true_trace
    }

    pub fn concurrent_apply(&self) -> bool {
        self.concurrent_apply
    }

    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        let out = (self.apply)(v);
        if out.len() != self.dim {
            return Err(Error::Dimension(format!(
                "operator returned a vector of length {}, expected {}",
                out.len(),
                self.dim
            )));
        }
        Ok(out)
    }

    /// Sample the linearity, symmetry and nonnegativity conditions on
    /// `samples` random vector pairs.
    pub fn check_invariants(&self, samples: usize, seed: u64) -> Result<()> {
        let mut rng = stream_rng(seed, 0);
        let mut u = vec![0.0; self.dim];
        let mut v = vec![0.0; self.dim];
        for _ in 0..samples {
            fill_normal(&mut rng, &mut u);
            fill_normal(&mut rng, &mut v);
            let au = self.apply(&u)?;
            let av = self.apply(&v)?;
            let sum: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a + b).collect();
            let asum = self.apply(&sum)?;
            let lin: f64 =
                asum.iter().zip(au.iter().zip(&av)).map(|(s, (a, b))| (s - a - b).powi(2)).sum::<f64>().sqrt();
            if lin > 1e-8 * (norm(&au) + norm(&av)) {
                return Err(Error::Domain(format!("operator is not linear (defect {lin:e})")));
            }
            let asym = (dot(&u, &av) - dot(&v, &au)).abs();
            if asym > 1e-8 * norm(&au) * norm(&v) {
                return Err(Error::Domain(format!("operator is not symmetric (defect {asym:e})")));
            }
            if dot(&v, &av) < -1e-10 * dot(&v, &v) {
                return Err(Error::Domain("operator has a negative quadratic form".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceEstimate {
    pub value: f64,
    pub n_used: usize,
    pub seed: u64,
}

fn estimate_with_rng(op: &ImplicitSpsdOperator, n: usize, rng: &mut impl Rng) -> Result<f64> {
    let mut w = vec![0.0; op.dim];
    let mut acc = 0.0;
    for _ in 0..n {
        fill_normal(rng, &mut w);
        let aw = op.apply(&w)?;
        acc += dot(&w, &aw);
    }
    Ok(acc / n as f64)
}

/// `tr_n(A)` from `n` Gaussian probes; exactly `n` calls to `apply`.
pub fn estimate_trace(op: &ImplicitSpsdOperator, n: usize, seed: u64) -> Result<TraceEstimate> {
    if n == 0 {
        return Err(Error::Domain("trace estimate needs at least one probe".into()));
    }
    let mut rng = stream_rng(seed, 0);
    let value = estimate_with_rng(op, n, &mut rng)?;
    Ok(TraceEstimate { value, n_used: n, seed })
}

/// Estimate with `n` taken from the sufficient bound for `side`.
pub fn estimate_trace_with_guarantee(
    op: &ImplicitSpsdOperator,
    t: ToleranceBudget,
    side: Side,
    seed: u64,
) -> Result<TraceEstimate> {
    let res = bounds::sufficient(t, side, DEFAULT_SCAN_LIMIT)?;
    let n = res.n.ok_or_else(|| {
        Error::Config(format!(
            "no {side} sample size up to {} for eps={}, delta={}",
            res.scan_limit,
            t.eps(),
            t.delta()
        ))
    })?;
    estimate_trace(op, n as usize, seed)
}

/// Whether `estimate` satisfies the accuracy requirement of `side`.
pub fn meets(side: Side, eps: f64, estimate: f64, truth: f64) -> bool {
    let lower_ok = estimate >= (1.0 - eps) * truth;
    let upper_ok = estimate <= (1.0 + eps) * truth;
    match side {
        Side::Lower => lower_ok,
        Side::Upper => upper_ok,
        Side::TwoSided => lower_ok && upper_ok,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coverage {
    pub coverage: f64,
    pub std_error: f64,
    pub trials: usize,
    pub n: usize,
}

/// Run `trials` independent `n`-probe estimates of an operator with known
/// trace and report the fraction meeting the `side` requirement. Trial `i`
/// uses stream `i` of `seed`.
pub fn empirical_coverage(
    op: &ImplicitSpsdOperator,
    t: ToleranceBudget,
    side: Side,
    n: usize,
    trials: usize,
    seed: u64,
) -> Result<Coverage> {
    let ratios = trial_ratios(op, n, trials, seed)?;
    let hits = ratios.iter().filter(|r| meets(side, t.eps(), **r, 1.0)).count();
    let cov = hits as f64 / trials as f64;
    Ok(Coverage { coverage: cov, std_error: (cov * (1.0 - cov) / trials as f64).sqrt(), trials, n })
}

/// `tr_n(A) / tr(A)` for `trials` independent estimates.
pub fn trial_ratios(op: &ImplicitSpsdOperator, n: usize, trials: usize, seed: u64) -> Result<Vec<f64>> {
    let truth = op
        .true_trace
        .ok_or_else(|| Error::Config("coverage experiments need an operator with a known trace".into()))?;
    if trials < 1000 {
        return Err(Error::Domain(format!("need at least 10^3 trials, got {trials}")));
    }
    if n == 0 {
        return Err(Error::Domain("trace estimate needs at least one probe".into()));
    }
    if !(truth > 0.0) {
        return Err(Error::Domain("coverage needs a positive trace".into()));
    }
    let one = |i: usize| -> Result<f64> {
        let mut rng = stream_rng(seed, i as u64);
        Ok(estimate_with_rng(op, n, &mut rng)? / truth)
    };
    if op.concurrent_apply {
        (0..trials).into_par_iter().map(one).collect()
    } else {
        (0..trials).map(one).collect()
    }
}

/// Named test operators with known trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fixture {
    /// `diag(1, 0, ..., 0)` of size 20.
    Rank1,
    /// Five unit eigenvalues padded to size 20.
    Rank5,
    /// `B B^T / 20` with `B` a seeded 20x20 standard-normal matrix.
    Random20,
    /// The 5x5 identity.
    Identity5,
}

impl Fixture {
    pub const ALL: [Fixture; 4] = [Fixture::Rank1, Fixture::Rank5, Fixture::Random20, Fixture::Identity5];

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|f| f.name() == s).ok_or_else(|| {
            Error::Config(format!("unknown fixture {s:?}, expected rank1, rank5, random20 or identity5"))
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Fixture::Rank1 => "rank1",
            Fixture::Rank5 => "rank5",
            Fixture::Random20 => "random20",
            Fixture::Identity5 => "identity5",
        }
    }

    /// The operator; `seed` only affects [`Fixture::Random20`].
    pub fn operator(&self, seed: u64) -> ImplicitSpsdOperator {
        let padded = |r: usize| {
            let mut d = vec![0.0; 20];
            d[..r].fill(1.0);
            ImplicitSpsdOperator::diagonal(d)
        };
        match self {
            Fixture::Rank1 => padded(1),
            Fixture::Rank5 => padded(5),
            Fixture::Identity5 => ImplicitSpsdOperator::diagonal(vec![1.0; 5]),
            Fixture::Random20 => {
                let n = 20;
                let mut b = vec![0.0; n * n];
                fill_normal(&mut stream_rng(seed, 0), &mut b);
                let mut a = vec![0.0; n * n];
                for i in 0..n {
                    for j in 0..n {
                        a[i * n + j] = dot(&b[i * n..(i + 1) * n], &b[j * n..(j + 1) * n]) / n as f64;
                    }
                }
                let op = ImplicitSpsdOperator::from_dense(n, a).expect("square");
                op.with_rank_hint(n as u64)
            }
        }
    }
}

/// Two-sample-free Kolmogorov-Smirnov statistic of `samples` against `cdf`.
pub fn ks_statistic(samples: &mut [f64], cdf: impl Fn(f64) -> Result<f64>) -> Result<f64> {
    samples.sort_by(|a, b| a.total_cmp(b));
    let n = samples.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in samples.iter().enumerate() {
        let f = cdf(x)?;
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    Ok(d)
}

/// Asymptotic 1% critical value of the one-sample KS statistic.
pub fn ks_critical_1pct(n: usize) -> f64 {
    1.6276 / (n as f64).sqrt()
}
