use serde::{Deserialize, Serialize};

use crate::bounds::{self, ToleranceBudget, DEFAULT_SCAN_LIMIT};
use crate::error::{Error, Result};

/// Conservative (`Hard`) or permissive (`Soft`) form of a probabilistic test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    Hard,
    Soft,
}

/// Rule choice for the cross validation, uncertainty check and stopping
/// criterion. The eight combinations are numbered (i) to (viii) with the
/// cross-validation rule varying slowest and the stopping rule fastest,
/// hard before soft.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Variant {
    pub cv: Rule,
    pub uc: Rule,
    pub stop: Rule,
}

const ROMAN: [&str; 8] = ["i", "ii", "iii", "iv", "v", "vi", "vii", "viii"];

impl Variant {
    pub fn all() -> [Variant; 8] {
        std::array::from_fn(|i| Variant::from_index(i).expect("index below 8"))
    }

    pub fn from_index(i: usize) -> Option<Variant> {
        if i >= 8 {
            return None;
        }
        let pick = |bit: usize| if i & bit == 0 { Rule::Hard } else { Rule::Soft };
        Some(Variant { cv: pick(4), uc: pick(2), stop: pick(1) })
    }

    pub fn index(&self) -> usize {
        let bit = |r: Rule, b: usize| if r == Rule::Soft { b } else { 0 };
        bit(self.cv, 4) + bit(self.uc, 2) + bit(self.stop, 1)
    }

    pub fn roman(&self) -> &'static str {
        ROMAN[self.index()]
    }

    pub fn from_roman(s: &str) -> Result<Variant> {
        let s = s.trim().trim_start_matches('(').trim_end_matches(')').to_ascii_lowercase();
        ROMAN
            .iter()
            .position(|r| *r == s)
            .and_then(Variant::from_index)
            .ok_or_else(|| Error::Parse(format!("unknown variant {s:?}; expected i..viii")))
    }
}

/// Either one of the eight stochastic variants or the full-data baseline,
/// which uses all experiments for every step and an exact stopping test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Stochastic(Variant),
    Vanilla,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Stochastic(v) => v.roman(),
            Method::Vanilla => "vanilla",
        }
    }

    pub fn parse(s: &str) -> Result<Method> {
        if s.eq_ignore_ascii_case("vanilla") {
            Ok(Method::Vanilla)
        } else {
            Variant::from_roman(s).map(Method::Stochastic)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gate {
    CrossValidation,
    UncertaintyCheck,
    Stopping,
}

/// Per-iteration tolerance schedule: `(iteration, gate, base budget) ->
/// budget`. The default keeps every budget fixed.
pub type BudgetSchedule = fn(usize, Gate, ToleranceBudget) -> ToleranceBudget;

fn constant_schedule(_: usize, _: Gate, t: ToleranceBudget) -> ToleranceBudget {
    t
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    /// Sufficient-decrease factor, `0 < kappa <= 1`.
    pub kappa: f64,
    pub cv_budget: ToleranceBudget,
    pub uc_budget: ToleranceBudget,
    pub stop_budget: ToleranceBudget,
    /// Misfit level at which to stop.
    pub rho: f64,
    pub method: Method,
    /// Initial fitting sample size.
    pub n0: usize,
    /// `(n_k, s) -> n_{k+1}` after a failed cross validation.
    pub growth: fn(usize, usize) -> usize,
    pub schedule: BudgetSchedule,
    pub max_outer_iters: usize,
    pub seed: u64,
    /// Inner CG iteration limit; truncation regularizes the step.
    pub pcg_iters: usize,
    pub pcg_tol: f64,
    pub line_search: super::ArmijoParams,
    pub scan_limit: u64,
    /// Replace any probe set of at least `s` vectors by the exact misfit over
    /// all `s` experiments, which costs at most as many solves and has no
    /// sampling error.
    pub exact_when_saturated: bool,
}

impl SolverConfig {
    /// Budgets `(0.05, 0.3)`, `(0.1, 0.3)`, `(0.1, 0.1)`, `kappa = 1`, inner
    /// CG limited to 20 iterations at tolerance `1e-3`.
    pub fn new(method: Method, rho: f64, seed: u64) -> Self {
        Self {
            kappa: 1.0,
            cv_budget: ToleranceBudget::new(0.05, 0.3).expect("valid"),
            uc_budget: ToleranceBudget::new(0.1, 0.3).expect("valid"),
            stop_budget: ToleranceBudget::new(0.1, 0.1).expect("valid"),
            rho,
            method,
            n0: 1,
            growth: super::double_capped,
            schedule: constant_schedule,
            max_outer_iters: 100,
            seed,
            pcg_iters: 20,
            pcg_tol: 1e-3,
            line_search: super::ArmijoParams::default(),
            scan_limit: DEFAULT_SCAN_LIMIT,
            exact_when_saturated: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.kappa > 0.0 && self.kappa <= 1.0) {
            return Err(Error::Config(format!("kappa must lie in (0, 1], got {}", self.kappa)));
        }
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return Err(Error::Config(format!("rho must be positive, got {}", self.rho)));
        }
        if self.n0 == 0 {
            return Err(Error::Config("initial sample size must be at least 1".into()));
        }
        if self.pcg_iters == 0 || !(self.pcg_tol > 0.0) {
            return Err(Error::Config("inner CG needs a positive iteration limit and tolerance".into()));
        }
        Ok(())
    }

    fn variant(&self) -> Option<Variant> {
        match self.method {
            Method::Stochastic(v) => Some(v),
            Method::Vanilla => None,
        }
    }
}

fn hard_factor(eps: f64) -> f64 {
    (1.0 - eps) / (1.0 + eps)
}

/// Cross validation: `phi_new <= kappa * c * phi_old` where `c` is
/// `(1-eps)/(1+eps)` for the hard rule and `(1+eps)/(1-eps)` for the soft one.
/// Both estimates must share one fresh probe set.
pub fn cross_validation_gate(rule: Rule, kappa: f64, eps: f64, phi_new: f64, phi_old: f64) -> bool {
    let c = match rule {
        Rule::Hard => hard_factor(eps),
        Rule::Soft => 1.0 / hard_factor(eps),
    };
    phi_new <= kappa * c * phi_old
}

/// Uncertainty check: `phi <= (1 -+ eps) rho`.
pub fn uncertainty_gate(rule: Rule, eps: f64, rho: f64, phi: f64) -> bool {
    phi <= threshold(rule, eps) * rho
}

/// Stopping criterion; same form as the uncertainty check with its own budget.
pub fn stopping_gate(rule: Rule, eps: f64, rho: f64, phi: f64) -> bool {
    phi <= threshold(rule, eps) * rho
}

fn threshold(rule: Rule, eps: f64) -> f64 {
    match rule {
        Rule::Hard => 1.0 - eps,
        Rule::Soft => 1.0 + eps,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateSizes {
    pub n_c: usize,
    pub n_u: usize,
    pub n_t: usize,
}

fn required(res: bounds::SampleSizeResult, what: &str) -> Result<usize> {
    res.n
        .map(|n| n as usize)
        .ok_or_else(|| Error::Config(format!("no {what} sample size found up to {}", res.scan_limit)))
}

/// Probe counts for the three gates.
///
/// Cross validation needs both one-sided guarantees at once (one iterate is
/// bounded from above, the other from below), so `n_c` is the larger of the
/// two sufficient sizes. The hard uncertainty and stopping tests rely on the
/// lower-side guarantee, the soft ones on the upper side.
pub fn gate_sample_sizes(cfg: &SolverConfig, iteration: usize) -> Result<GateSizes> {
    let variant = cfg.variant().unwrap_or(Variant { cv: Rule::Hard, uc: Rule::Hard, stop: Rule::Hard });
    let cv = (cfg.schedule)(iteration, Gate::CrossValidation, cfg.cv_budget);
    let uc = (cfg.schedule)(iteration, Gate::UncertaintyCheck, cfg.uc_budget);
    let st = (cfg.schedule)(iteration, Gate::Stopping, cfg.stop_budget);
    let lim = cfg.scan_limit;
    let n_c = required(bounds::sufficient_lower(cv, lim)?, "cross-validation")?
        .max(required(bounds::sufficient_upper(cv, lim)?, "cross-validation")?);
    let one_sided = |rule: Rule, t: ToleranceBudget, what: &str| -> Result<usize> {
        match rule {
            Rule::Hard => required(bounds::sufficient_lower(t, lim)?, what),
            Rule::Soft => required(bounds::sufficient_upper(t, lim)?, what),
        }
    };
    Ok(GateSizes {
        n_c,
        n_u: one_sided(variant.uc, uc, "uncertainty-check")?,
        n_t: one_sided(variant.stop, st, "stopping")?,
    })
}
