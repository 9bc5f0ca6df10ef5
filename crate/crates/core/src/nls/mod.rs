//! Stochastic Gauss-Newton for least-squares problems with many experiments.
//!
//! The misfit `phi(m) = sum_i ||f(m, q_i) - d_i||^2` over `s` experiments is
//! replaced by its Monte-Carlo estimate with Gaussian weight vectors. Because
//! the forward map is linear in the source, each weight vector costs a single
//! forward evaluation on the combined source `sum_i w_i q_i`. Fresh
//! independent weight sets drive three probabilistic tests per iteration: a
//! cross validation of the new iterate, an uncertainty check, and the
//! stopping criterion.

mod forward;
mod gates;
mod gauss_newton;
mod misfit;
mod report;
mod solver;

pub use forward::{Dataset, ForwardModel, Weighting};
pub use gates::{
    cross_validation_gate, gate_sample_sizes, stopping_gate, uncertainty_gate, BudgetSchedule, Gate, GateSizes, Method,
    Rule, SolverConfig, Variant,
};
pub use gauss_newton::{gauss_newton_step, line_search, ArmijoParams, GaussNewtonStep, LineSearchOutcome};
pub use misfit::{full_misfit, sampled_misfit, sampled_misfit_with, Probes, SampledSystem};
pub use report::{GateRecord, IterationRecord, SolveReport, Termination};
pub use solver::{double_capped, solve, solve_from};
