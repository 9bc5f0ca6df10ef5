use super::forward::{Dataset, ForwardModel};
use super::gates::{
    cross_validation_gate, gate_sample_sizes, stopping_gate, uncertainty_gate, Gate, Method, SolverConfig,
};
use super::gauss_newton::{search_on_system, step_on_system};
use super::misfit::{Probes, SampledSystem};
use super::report::{GateRecord, IterationRecord, SolveReport, Termination};
use crate::error::{check_len, Result};
use crate::rng::ProbeStream;

/// `min(2 n, s)`
pub fn double_capped(n: usize, s: usize) -> usize {
    (2 * n).min(s)
}

/// Run the solver from the zero model.
pub fn solve(fm: &dyn ForwardModel, ds: &Dataset, cfg: &SolverConfig) -> Result<SolveReport> {
    solve_from(fm, ds, cfg, vec![0.0; fm.model_len()])
}

/// Exact residuals at the two most recently evaluated models.
struct ExactCache {
    entries: Vec<(Vec<f64>, Vec<Vec<f64>>)>,
}

impl ExactCache {
    fn get(&self, m: &[f64]) -> Option<&Vec<Vec<f64>>> {
        self.entries.iter().find(|(k, _)| k == m).map(|(_, r)| r)
    }

    fn put(&mut self, m: &[f64], res: Vec<Vec<f64>>) {
        self.entries.retain(|(k, _)| k != m);
        self.entries.insert(0, (m.to_vec(), res));
        self.entries.truncate(2);
    }

    /// Exact misfit at `m` and the solves it cost.
    fn misfit(&mut self, fm: &dyn ForwardModel, ds: &Dataset, sys: &SampledSystem, m: &[f64]) -> Result<(f64, u64)> {
        if let Some(r) = self.get(m) {
            return Ok((sys.value(r), 0));
        }
        let r = sys.residuals(fm, ds, m)?;
        let v = sys.value(&r);
        self.put(m, r);
        Ok((v, sys.len() as u64))
    }
}

/// Stochastic Gauss-Newton with cross validation, uncertainty check and
/// stopping criterion, starting from `m0`.
///
/// Each iteration fits with `n_k` fresh probes, then validates the new
/// iterate against the old one on `n_c` fresh probes. The new iterate is kept
/// whether or not validation passes; a failure only grows `n_k`. After a
/// pass, `n_u` fresh probes test the stopping level and, if that passes too,
/// `n_t` fresh probes decide termination. A step whose line search finds no
/// decrease is not taken.
///
/// All probes come from one sequential stream seeded with `cfg.seed`, drawn
/// in the order fit, cv, uc, stop within each iteration.
///
/// With `cfg.exact_when_saturated`, any probe set of at least `s` vectors is
/// replaced by all `s` experiments, and exact residuals are reused whenever
/// the same model is evaluated again.
///
/// With [`Method::Vanilla`] every step uses all experiments and the gates
/// are replaced by the exact test `phi(m) <= rho`.
pub fn solve_from(fm: &dyn ForwardModel, ds: &Dataset, cfg: &SolverConfig, m0: Vec<f64>) -> Result<SolveReport> {
    cfg.validate()?;
    ds.check_model(fm)?;
    check_len("initial model", m0.len(), fm.model_len())?;
    let s = ds.num_experiments();
    let start_count = fm.solve_count();
    let mut stream = ProbeStream::new(cfg.seed);
    let exact_sys = SampledSystem::new(ds, &Probes::Identity)?;
    let mut exact = ExactCache { entries: Vec::new() };
    let mut m = m0;
    let mut n_k = cfg.n0.min(s);
    let mut iterations = Vec::new();
    let mut events = Vec::new();
    let mut termination = Termination::MaxIters;
    let vanilla = cfg.method == Method::Vanilla;
    let first_sizes = if vanilla { None } else { Some(gate_sample_sizes(cfg, 0)?) };
    let use_exact = |n: usize| vanilla || (cfg.exact_when_saturated && n >= s);

    for k in 0..cfg.max_outer_iters {
        let before = fm.solve_count();
        if vanilla {
            n_k = s;
        }
        let exact_fit = use_exact(n_k);
        let (fit_sys, carried) = if exact_fit {
            (None, exact.get(&m).cloned())
        } else {
            let probes = Probes::draw(&mut stream, &format!("fit/{k}"), n_k, s);
            (Some(SampledSystem::new(ds, &probes)?), None)
        };
        let sys = fit_sys.as_ref().unwrap_or(&exact_sys);
        let reused = carried.is_some();
        let step = step_on_system(fm, ds, &m, sys, carried, cfg.pcg_iters, cfg.pcg_tol)?;
        if step.cg_breakdown {
            events.push(format!("iteration {k}: inner CG met non-positive curvature"));
        }
        let ls = search_on_system(fm, ds, &m, &step.step, sys, step.misfit, step.slope(), cfg.line_search)?;
        let m_new: Vec<f64> = if ls.decreased {
            m.iter().zip(&step.step).map(|(a, b)| a + ls.alpha * b).collect()
        } else {
            events.push(format!("iteration {k}: line search found no decrease; step not taken"));
            m.clone()
        };
        if exact_fit && ls.decreased {
            if let Some(r) = ls.residuals {
                exact.put(&m_new, r);
            }
        }

        let mut record = IterationRecord {
            k,
            n_k,
            fit_misfit: step.misfit,
            fit_misfit_after: if ls.decreased { ls.misfit } else { step.misfit },
            alpha: if ls.decreased { ls.alpha } else { 0.0 },
            step_decreased: ls.decreased,
            line_search_trials: ls.trials,
            cg_iterations: step.cg_iterations,
            cg_breakdown: step.cg_breakdown,
            exact_fit,
            residuals_reused: reused,
            cross_validation: None,
            uncertainty_check: None,
            stopping: None,
            solves: 0,
        };

        let mut stop = false;
        let mut saturated = false;
        match (cfg.method, first_sizes) {
            (Method::Stochastic(variant), Some(_)) => {
                let sizes = gate_sample_sizes(cfg, k)?;
                let cv_t = (cfg.schedule)(k, Gate::CrossValidation, cfg.cv_budget);
                let uc_t = (cfg.schedule)(k, Gate::UncertaintyCheck, cfg.uc_budget);
                let st_t = (cfg.schedule)(k, Gate::Stopping, cfg.stop_budget);

                let (phi_old, phi_new, cv_cost) = if use_exact(sizes.n_c) {
                    let (a, ca) = exact.misfit(fm, ds, &exact_sys, &m)?;
                    let (b, cb) = exact.misfit(fm, ds, &exact_sys, &m_new)?;
                    (a, b, ca + cb)
                } else {
                    let cv_sys = SampledSystem::new(ds, &Probes::draw(&mut stream, &format!("cv/{k}"), sizes.n_c, s))?;
                    (cv_sys.misfit(fm, ds, &m)?, cv_sys.misfit(fm, ds, &m_new)?, 2 * sizes.n_c as u64)
                };
                let cv_pass = cross_validation_gate(variant.cv, cfg.kappa, cv_t.eps(), phi_new, phi_old);
                record.cross_validation = Some(GateRecord {
                    n: sizes.n_c,
                    exact: use_exact(sizes.n_c),
                    phi: phi_new,
                    phi_old: Some(phi_old),
                    passed: cv_pass,
                    solves: cv_cost,
                });

                let mut single = |tag: &str, n: usize, stream: &mut ProbeStream| -> Result<(f64, u64)> {
                    if use_exact(n) {
                        exact.misfit(fm, ds, &exact_sys, &m_new)
                    } else {
                        let sys = SampledSystem::new(ds, &Probes::draw(stream, &format!("{tag}/{k}"), n, s))?;
                        Ok((sys.misfit(fm, ds, &m_new)?, n as u64))
                    }
                };
                if cv_pass {
                    let (phi_u, cost) = single("uc", sizes.n_u, &mut stream)?;
                    let uc_pass = uncertainty_gate(variant.uc, uc_t.eps(), cfg.rho, phi_u);
                    record.uncertainty_check = Some(GateRecord {
                        n: sizes.n_u,
                        exact: use_exact(sizes.n_u),
                        phi: phi_u,
                        phi_old: None,
                        passed: uc_pass,
                        solves: cost,
                    });
                    if uc_pass {
                        let (phi_t, cost) = single("stop", sizes.n_t, &mut stream)?;
                        stop = stopping_gate(variant.stop, st_t.eps(), cfg.rho, phi_t);
                        record.stopping = Some(GateRecord {
                            n: sizes.n_t,
                            exact: use_exact(sizes.n_t),
                            phi: phi_t,
                            phi_old: None,
                            passed: stop,
                            solves: cost,
                        });
                    }
                } else {
                    // Nothing changes from here on if the exact fit is stuck,
                    // and a sampled fit at full size has failed both tests.
                    saturated = n_k == s && !ls.decreased;
                    n_k = (cfg.growth)(n_k, s).clamp(n_k, s);
                }
            }
            _ => {
                stop = record.fit_misfit_after <= cfg.rho;
                saturated = !ls.decreased && !stop;
            }
        }
        if exact_fit && !ls.decreased && !stop {
            // The next exact fit would repeat this one.
            saturated = true;
        }
        m = m_new;
        record.solves = fm.solve_count() - before;
        iterations.push(record);
        if stop {
            termination = Termination::StoppedByCriterion;
            break;
        }
        if saturated {
            termination = Termination::SampleSizeSaturated;
            break;
        }
    }

    Ok(SolveReport {
        method: cfg.method.name().to_string(),
        seed: cfg.seed,
        rho: cfg.rho,
        kappa: cfg.kappa,
        gate_sizes: first_sizes,
        line_search: cfg.line_search,
        pcg_iters: cfg.pcg_iters,
        pcg_tol: cfg.pcg_tol,
        outer_iterations: iterations.len(),
        iterations,
        pde_solve_count: fm.solve_count() - start_count,
        termination,
        probe_segments: stream.segments().to_vec(),
        events,
        final_model: m,
    })
}
