use serde::{Deserialize, Serialize};

use super::forward::{Dataset, ForwardModel};
use super::misfit::{map_probes, Probes, SampledSystem};
use crate::error::{check_len, Result};
use crate::linalg::{axpy, dot, pcg};

/// Backtracking line-search constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArmijoParams {
    pub initial_step: f64,
    pub shrink: f64,
    pub sufficient_decrease: f64,
    pub max_backtracks: usize,
}

impl Default for ArmijoParams {
    fn default() -> Self {
        Self { initial_step: 1.0, shrink: 0.5, sufficient_decrease: 1e-4, max_backtracks: 10 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussNewtonStep {
    pub step: Vec<f64>,
    /// Misfit estimate at the current model for the fitting probes.
    pub misfit: f64,
    pub gradient: Vec<f64>,
    /// Number of Gauss-Newton operator products in the inner CG.
    pub cg_iterations: usize,
    pub cg_relative_residual: f64,
    pub cg_breakdown: bool,
}

impl GaussNewtonStep {
    /// Directional derivative of the misfit estimate along the step.
    pub fn slope(&self) -> f64 {
        dot(&self.gradient, &self.step)
    }
}

/// Gauss-Newton step for the misfit estimate defined by `probes`.
///
/// Solves `(sum_j J_j^T J_j) dm = -sum_j J_j^T r_j` by preconditioned CG
/// from zero, using [`ForwardModel::precondition`], stopping
/// after `pcg_iters` products or at relative residual `pcg_tol`. Cost: one
/// solve per probe for the residuals, one for the gradient, and two per probe
/// for every CG iteration.
pub fn gauss_newton_step(
    fm: &dyn ForwardModel,
    ds: &Dataset,
    m: &[f64],
    probes: &Probes,
    pcg_iters: usize,
    pcg_tol: f64,
) -> Result<GaussNewtonStep> {
    ds.check_model(fm)?;
    check_len("model", m.len(), fm.model_len())?;
    let sys = SampledSystem::new(ds, probes)?;
    step_on_system(fm, ds, m, &sys, None, pcg_iters, pcg_tol)
}

pub(crate) fn step_on_system(
    fm: &dyn ForwardModel,
    ds: &Dataset,
    m: &[f64],
    sys: &SampledSystem,
    residuals: Option<Vec<Vec<f64>>>,
    pcg_iters: usize,
    pcg_tol: f64,
) -> Result<GaussNewtonStep> {
    let residuals = match residuals {
        Some(r) => r,
        None => sys.residuals(fm, ds, m)?,
    };
    let misfit = sys.value(&residuals);
    let nm = fm.model_len();

    let sum_models = |parts: Vec<Vec<f64>>| {
        let mut acc = vec![0.0; nm];
        for p in parts {
            axpy(1.0, &p, &mut acc);
        }
        acc
    };

    let adj = map_probes(fm, sys.len(), |j| {
        let mut y = residuals[j].clone();
        ds.whiten_adjoint(&mut y);
        fm.jacobian_adjoint_apply(m, &sys.sources[j], &y)
    })?;
    let jtr = sum_models(adj);
    let gradient: Vec<f64> = jtr.iter().map(|v| 2.0 * sys.weight * v).collect();
    let rhs: Vec<f64> = jtr.iter().map(|v| -v).collect();

    let hess = |p: &[f64]| -> Result<Vec<f64>> {
        let parts = map_probes(fm, sys.len(), |j| {
            let mut jp = fm.jacobian_apply(m, &sys.sources[j], p)?;
            ds.whiten(&mut jp);
            ds.whiten_adjoint(&mut jp);
            fm.jacobian_adjoint_apply(m, &sys.sources[j], &jp)
        })?;
        Ok(sum_models(parts))
    };
    let out = pcg(hess, |r| fm.precondition(r), &rhs, pcg_iters, pcg_tol)?;
    if out.breakdown {
        log::warn!("Gauss-Newton CG stopped on non-positive curvature after {} iterations", out.iterations);
    }
    Ok(GaussNewtonStep {
        step: out.x,
        misfit,
        gradient,
        cg_iterations: out.iterations,
        cg_relative_residual: out.relative_residual,
        cg_breakdown: out.breakdown,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LineSearchOutcome {
    pub alpha: f64,
    /// Misfit estimate at `m + alpha * step`.
    pub misfit: f64,
    /// False when no trial met the sufficient-decrease condition (or the
    /// step was zero); `alpha` is then the last step tried.
    pub decreased: bool,
    pub trials: usize,
    pub(crate) residuals: Option<Vec<Vec<f64>>>,
}

/// Armijo backtracking on the misfit estimate of `probes`, the same probes
/// that produced the step.
#[allow(clippy::too_many_arguments)]
pub fn line_search(
    fm: &dyn ForwardModel,
    ds: &Dataset,
    m: &[f64],
    step: &[f64],
    probes: &Probes,
    misfit: f64,
    slope: f64,
    params: ArmijoParams,
) -> Result<LineSearchOutcome> {
    let sys = SampledSystem::new(ds, probes)?;
    search_on_system(fm, ds, m, step, &sys, misfit, slope, params)
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn search_on_system(
    fm: &dyn ForwardModel,
    ds: &Dataset,
    m: &[f64],
    step: &[f64],
    sys: &SampledSystem,
    misfit: f64,
    slope: f64,
    params: ArmijoParams,
) -> Result<LineSearchOutcome> {
    check_len("step", step.len(), m.len())?;
    if step.iter().all(|v| *v == 0.0) {
        return Ok(LineSearchOutcome {
            alpha: params.initial_step,
            misfit,
            decreased: false,
            trials: 0,
            residuals: None,
        });
    }
    let mut alpha = params.initial_step;
    let mut trials = 0;
    let mut last = (misfit, None);
    for attempt in 0..=params.max_backtracks {
        if attempt > 0 {
            alpha *= params.shrink;
        }
        let trial: Vec<f64> = m.iter().zip(step).map(|(a, b)| a + alpha * b).collect();
        let res = sys.residuals(fm, ds, &trial)?;
        let value = sys.value(&res);
        trials += 1;
        if value <= misfit + params.sufficient_decrease * alpha * slope && value < misfit {
            return Ok(LineSearchOutcome { alpha, misfit: value, decreased: true, trials, residuals: Some(res) });
        }
        last = (value, Some(res));
    }
    Ok(LineSearchOutcome { alpha, misfit: last.0, decreased: false, trials, residuals: last.1 })
}
