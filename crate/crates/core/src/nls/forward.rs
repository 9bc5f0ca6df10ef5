use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};

/// A forward map `f(m, q)` that is linear in the source `q`, with its
/// Jacobian `J_q(m) = df(m, q)/dm` available through products.
///
/// Implementations count every PDE solve (or equivalent unit of cost) in
/// [`ForwardModel::solve_count`].
pub trait ForwardModel: Sync {
    fn model_len(&self) -> usize;
    fn source_len(&self) -> usize;
    fn data_len(&self) -> usize;

    fn predict(&self, m: &[f64], q: &[f64]) -> Result<Vec<f64>>;

    /// `J_q(m) v`
    fn jacobian_apply(&self, m: &[f64], q: &[f64], v: &[f64]) -> Result<Vec<f64>>;

    /// `J_q(m)^T y`
    fn jacobian_adjoint_apply(&self, m: &[f64], q: &[f64], y: &[f64]) -> Result<Vec<f64>>;

    /// Preconditioner `M^{-1} r` for the inner Gauss-Newton CG. Must be
    /// symmetric positive definite; the identity by default.
    fn precondition(&self, r: &[f64]) -> Vec<f64> {
        r.to_vec()
    }

    /// Monotone counter of solves performed so far.
    fn solve_count(&self) -> u64;

    /// Whether the three apply methods may run concurrently.
    fn concurrent_apply(&self) -> bool {
        false
    }
}

/// How data residuals are weighted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Weighting {
    /// `sum_i ||f_i - d_i||^2`
    Plain,
    /// `sum_i ||C^{-1}(f_i - d_i)||^2` with `Sigma = C C^T` the noise
    /// covariance shared by all experiments. `factor` is the lower-triangular
    /// `C`, row-major.
    Covariance { factor: Vec<f64> },
    /// `sum_i ||f_i - d_i||^2 / sigma_i^2`
    PerExperiment { sigmas: Vec<f64> },
}

/// Sources `q_i` and measurements `d_i` of `s` experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    sources: Vec<Vec<f64>>,
    data: Vec<Vec<f64>>,
    weighting: Weighting,
}

impl Dataset {
    pub fn new(sources: Vec<Vec<f64>>, data: Vec<Vec<f64>>, weighting: Weighting) -> Result<Self> {
        if sources.is_empty() {
            return Err(Error::Dimension("a dataset needs at least one experiment".into()));
        }
        check_len("data columns", data.len(), sources.len())?;
        let lq = sources[0].len();
        for q in &sources {
            check_len("source", q.len(), lq)?;
        }
        let l = data[0].len();
        for d in &data {
            check_len("data column", d.len(), l)?;
        }
        match &weighting {
            Weighting::Plain => {}
            Weighting::Covariance { factor } => {
                check_len("covariance factor", factor.len(), l * l)?;
                for i in 0..l {
                    if !(factor[i * l + i].abs() > 0.0) {
                        return Err(Error::Domain("covariance factor is singular".into()));
                    }
                    if (i + 1..l).any(|j| factor[i * l + j] != 0.0) {
                        return Err(Error::Domain("covariance factor must be lower triangular".into()));
                    }
                }
            }
            Weighting::PerExperiment { sigmas } => {
                check_len("sigmas", sigmas.len(), sources.len())?;
                if sigmas.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
                    return Err(Error::Domain("per-experiment sigmas must be positive".into()));
                }
            }
        }
        Ok(Self { sources, data, weighting })
    }

    pub fn num_experiments(&self) -> usize {
        self.sources.len()
    }

    pub fn data_len(&self) -> usize {
        self.data[0].len()
    }

    pub fn source_len(&self) -> usize {
        self.sources[0].len()
    }

    pub fn sources(&self) -> &[Vec<f64>] {
        &self.sources
    }

    pub fn data(&self) -> &[Vec<f64>] {
        &self.data
    }

    pub fn weighting(&self) -> &Weighting {
        &self.weighting
    }

    pub(crate) fn check_model(&self, fm: &dyn ForwardModel) -> Result<()> {
        check_len("forward model source length", fm.source_len(), self.source_len())?;
        check_len("forward model data length", fm.data_len(), self.data_len())
    }

    /// Scale applied to experiment `i`'s weight before combining.
    pub(crate) fn experiment_scale(&self, i: usize) -> f64 {
        match &self.weighting {
            Weighting::PerExperiment { sigmas } => 1.0 / sigmas[i],
            _ => 1.0,
        }
    }

    /// Apply `C^{-1}` (covariance weighting) to a data-space vector in place.
    pub(crate) fn whiten(&self, r: &mut [f64]) {
        if let Weighting::Covariance { factor } = &self.weighting {
            let l = r.len();
            for i in 0..l {
                let mut s = r[i];
                for j in 0..i {
                    s -= factor[i * l + j] * r[j];
                }
                r[i] = s / factor[i * l + i];
            }
        }
    }

    /// Apply `C^{-T}` in place.
    pub(crate) fn whiten_adjoint(&self, r: &mut [f64]) {
        if let Weighting::Covariance { factor } = &self.weighting {
            let l = r.len();
            for i in (0..l).rev() {
                let mut s = r[i];
                for j in i + 1..l {
                    s -= factor[j * l + i] * r[j];
                }
                r[i] = s / factor[i * l + i];
            }
        }
    }
}
