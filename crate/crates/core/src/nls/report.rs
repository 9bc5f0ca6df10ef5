use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::gates::GateSizes;
use super::gauss_newton::ArmijoParams;
use crate::rng::StreamSegment;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    StoppedByCriterion,
    MaxIters,
    /// All experiments were already in use, cross validation failed and the
    /// fitting step could not decrease the misfit estimate.
    SampleSizeSaturated,
}

impl Termination {
    pub fn as_str(&self) -> &'static str {
        match self {
            Termination::StoppedByCriterion => "stopped_by_criterion",
            Termination::MaxIters => "max_iters",
            Termination::SampleSizeSaturated => "sample_size_saturated",
        }
    }
}

/// One evaluated gate. For cross validation `phi` is the new iterate's
/// estimate and `phi_old` the previous iterate's on the same probes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateRecord {
    /// Sample size the gate asked for.
    pub n: usize,
    /// Whether the exact misfit over all experiments was used instead.
    pub exact: bool,
    pub phi: f64,
    pub phi_old: Option<f64>,
    pub passed: bool,
    /// Forward solves spent on the gate.
    pub solves: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub k: usize,
    pub n_k: usize,
    /// Fitting misfit estimate before and after the step.
    pub fit_misfit: f64,
    pub fit_misfit_after: f64,
    pub alpha: f64,
    pub step_decreased: bool,
    pub line_search_trials: usize,
    pub cg_iterations: usize,
    pub cg_breakdown: bool,
    /// Whether the fitting used all experiments exactly.
    pub exact_fit: bool,
    /// Whether the fitting residuals were reused from an earlier evaluation
    /// at the same model instead of recomputed.
    pub residuals_reused: bool,
    pub cross_validation: Option<GateRecord>,
    pub uncertainty_check: Option<GateRecord>,
    pub stopping: Option<GateRecord>,
    /// Solves spent in this iteration.
    pub solves: u64,
}

impl IterationRecord {
    /// Solve count implied by the recorded work.
    pub fn expected_solves(&self) -> u64 {
        let n = self.n_k as u64;
        let residual = if self.residuals_reused { 0 } else { n };
        let gate = |g: &Option<GateRecord>| g.map_or(0, |g| g.solves);
        residual
            + n
            + 2 * n * self.cg_iterations as u64
            + n * self.line_search_trials as u64
            + gate(&self.cross_validation)
            + gate(&self.uncertainty_check)
            + gate(&self.stopping)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub method: String,
    pub seed: u64,
    pub rho: f64,
    pub kappa: f64,
    pub gate_sizes: Option<GateSizes>,
    pub line_search: ArmijoParams,
    pub pcg_iters: usize,
    pub pcg_tol: f64,
    pub outer_iterations: usize,
    pub iterations: Vec<IterationRecord>,
    pub pde_solve_count: u64,
    pub termination: Termination,
    pub probe_segments: Vec<(String, StreamSegment)>,
    /// Numerical events that were survived, e.g. CG curvature breakdowns.
    pub events: Vec<String>,
    pub final_model: Vec<f64>,
}

impl SolveReport {
    pub fn sample_sizes(&self) -> Vec<usize> {
        self.iterations.iter().map(|r| r.n_k).collect()
    }

    /// Last estimate compared against `rho`: the stopping test's if it ran,
    /// otherwise the most recent uncertainty check, cross validation, or
    /// fitting estimate.
    pub fn final_estimate(&self) -> Option<f64> {
        let last = self.iterations.last()?;
        Some(
            last.stopping.or(last.uncertainty_check).or(last.cross_validation).map_or(last.fit_misfit_after, |g| g.phi),
        )
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// One CSV row per outer iteration.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "k,n_k,fit_misfit,fit_misfit_after,alpha,step_decreased,cg_iterations,line_search_trials,\
             cv_n,cv_phi_old,cv_phi_new,cv_passed,uc_n,uc_phi,uc_passed,stop_n,stop_phi,stop_passed,solves\n",
        );
        let gate = |g: &Option<GateRecord>, old: bool| match g {
            Some(g) if old => format!("{},{},{},{}", g.n, g.phi_old.unwrap_or(f64::NAN), g.phi, g.passed),
            Some(g) => format!("{},{},{}", g.n, g.phi, g.passed),
            None if old => ",,,".to_string(),
            None => ",,".to_string(),
        };
        for r in &self.iterations {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{}",
                r.k,
                r.n_k,
                r.fit_misfit,
                r.fit_misfit_after,
                r.alpha,
                r.step_decreased,
                r.cg_iterations,
                r.line_search_trials,
                gate(&r.cross_validation, true),
                gate(&r.uncertainty_check, false),
                gate(&r.stopping, false),
                r.solves
            );
        }
        out
    }
}
