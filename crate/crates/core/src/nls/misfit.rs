use rayon::prelude::*;

use super::forward::{Dataset, ForwardModel};
use crate::error::{check_len, Error, Result};
use crate::rng::ProbeStream;

/// Weight vectors used to combine experiments.
#[derive(Debug, Clone, PartialEq)]
pub enum Probes {
    /// `n` standard-normal vectors of length `s`; the estimate is their mean.
    Gaussian(Vec<Vec<f64>>),
    /// The `s` unit vectors; the estimate is their sum, i.e. the exact misfit.
    Identity,
}

impl Probes {
    pub fn draw(stream: &mut ProbeStream, tag: &str, n: usize, s: usize) -> Self {
        Probes::Gaussian(stream.draw(tag, n, s))
    }
}

/// Combined sources `Q w_j` and data `D w_j` for one probe set, with the
/// factor that turns `sum_j ||r_j||^2` into the misfit estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledSystem {
    pub sources: Vec<Vec<f64>>,
    pub data: Vec<Vec<f64>>,
    pub weight: f64,
}

impl SampledSystem {
    pub fn new(ds: &Dataset, probes: &Probes) -> Result<Self> {
        let s = ds.num_experiments();
        match probes {
            Probes::Identity => Ok(Self {
                sources: (0..s).map(|i| scaled(&ds.sources()[i], ds.experiment_scale(i))).collect(),
                data: (0..s).map(|i| scaled(&ds.data()[i], ds.experiment_scale(i))).collect(),
                weight: 1.0,
            }),
            Probes::Gaussian(ws) => {
                if ws.is_empty() {
                    return Err(Error::Domain("need at least one probe".into()));
                }
                let mut sources = Vec::with_capacity(ws.len());
                let mut data = Vec::with_capacity(ws.len());
                for w in ws {
                    check_len("probe", w.len(), s)?;
                    let mut q = vec![0.0; ds.source_len()];
                    let mut d = vec![0.0; ds.data_len()];
                    for (i, &wi) in w.iter().enumerate() {
                        let c = wi * ds.experiment_scale(i);
                        for (a, b) in q.iter_mut().zip(&ds.sources()[i]) {
                            *a += c * b;
                        }
                        for (a, b) in d.iter_mut().zip(&ds.data()[i]) {
                            *a += c * b;
                        }
                    }
                    sources.push(q);
                    data.push(d);
                }
                Ok(Self { sources, data, weight: 1.0 / ws.len() as f64 })
            }
        }
    }

    pub fn len(&self) -> usize {
        self.sources.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sources.is_empty()
    }

    /// Whitened residuals `r_j = W (f(m, Q w_j) - D w_j)`, one solve each.
    pub fn residuals(&self, fm: &dyn ForwardModel, ds: &Dataset, m: &[f64]) -> Result<Vec<Vec<f64>>> {
        map_probes(fm, self.len(), |j| {
            let mut r = fm.predict(m, &self.sources[j])?;
            check_len("prediction", r.len(), self.data[j].len())?;
            for (a, b) in r.iter_mut().zip(&self.data[j]) {
                *a -= b;
            }
            ds.whiten(&mut r);
            Ok(r)
        })
    }

    pub fn value(&self, residuals: &[Vec<f64>]) -> f64 {
        self.weight * residuals.iter().map(|r| r.iter().map(|v| v * v).sum::<f64>()).sum::<f64>()
    }

    pub fn misfit(&self, fm: &dyn ForwardModel, ds: &Dataset, m: &[f64]) -> Result<f64> {
        Ok(self.value(&self.residuals(fm, ds, m)?))
    }
}

fn scaled(v: &[f64], c: f64) -> Vec<f64> {
    if c == 1.0 {
        v.to_vec()
    } else {
        v.iter().map(|x| c * x).collect()
    }
}

/// Evaluate `f(0..n)` in probe order, in parallel when the model allows it.
pub(crate) fn map_probes<T: Send>(
    fm: &dyn ForwardModel,
    n: usize,
    f: impl Fn(usize) -> Result<T> + Sync + Send,
) -> Result<Vec<T>> {
    if fm.concurrent_apply() {
        (0..n).into_par_iter().map(f).collect()
    } else {
        (0..n).map(f).collect()
    }
}

/// Exact misfit over all experiments; one solve per experiment.
pub fn full_misfit(fm: &dyn ForwardModel, ds: &Dataset, m: &[f64]) -> Result<f64> {
    ds.check_model(fm)?;
    check_len("model", m.len(), fm.model_len())?;
    SampledSystem::new(ds, &Probes::Identity)?.misfit(fm, ds, m)
}

/// Unbiased `n`-probe estimate of the misfit drawn from a fresh stream.
pub fn sampled_misfit(fm: &dyn ForwardModel, ds: &Dataset, m: &[f64], n: usize, seed: u64) -> Result<f64> {
    let mut stream = ProbeStream::new(seed);
    let probes = Probes::draw(&mut stream, "misfit", n, ds.num_experiments());
    sampled_misfit_with(fm, ds, m, &probes)
}

/// Misfit estimate for an explicit probe set.
pub fn sampled_misfit_with(fm: &dyn ForwardModel, ds: &Dataset, m: &[f64], probes: &Probes) -> Result<f64> {
    ds.check_model(fm)?;
    check_len("model", m.len(), fm.model_len())?;
    SampledSystem::new(ds, probes)?.misfit(fm, ds, m)
}
