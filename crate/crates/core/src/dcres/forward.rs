use std::collections::hash_map::DefaultHasher;
use std::collections::{HashMap, VecDeque};
use std::hash::{Hash, Hasher};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use super::layout::SourceReceiverLayout;
use super::operator::{solve_pde, DirectSolver, PdeOperator, PdeSolver};
use super::transfer::Transfer;
use crate::error::{check_len, Error, Result};
use crate::linalg::BandedCholesky;
use crate::nls::ForwardModel;

const CACHED_MODELS: usize = 4;

fn key(v: &[f64]) -> u64 {
    let mut h = DefaultHasher::new();
    for x in v {
        x.to_bits().hash(&mut h);
    }
    h.finish()
}

/// Fields keyed by source hash, with the source kept to rule out collisions.
type FieldCache = Mutex<HashMap<u64, Vec<(Vec<f64>, Arc<Vec<f64>>)>>>;

struct Prepared {
    m: Vec<f64>,
    op: PdeOperator,
    direct: Option<DirectSolver>,
    dpsi: Vec<f64>,
    fields: FieldCache,
}

/// DC-resistivity forward map `f(m, q) = P L(psi(m))^{-1} q` with adjoint
/// sensitivities.
///
/// Operators and fields are cached for the few most recent models, so the
/// field of a `predict` call is reused by Jacobian products at the same
/// model and source. Every PDE solve increments [`ForwardModel::solve_count`].
pub struct DcResistivity {
    layout: SourceReceiverLayout,
    transfer: Transfer,
    solver: PdeSolver,
    count: AtomicU64,
    cache: Mutex<VecDeque<Arc<Prepared>>>,
    smoother: Option<(f64, BandedCholesky)>,
}

impl DcResistivity {
    pub fn new(layout: SourceReceiverLayout, transfer: Transfer, solver: PdeSolver) -> Self {
        Self { layout, transfer, solver, count: AtomicU64::new(0), cache: Mutex::new(VecDeque::new()), smoother: None }
    }

    /// Precondition the Gauss-Newton CG with `(shift I + K)^{-1}`, `K` the
    /// unit-weight graph Laplacian of the cells with zero-flux boundaries.
    /// Smaller shifts give smoother model updates.
    pub fn with_smoothing(mut self, shift: f64) -> Result<Self> {
        if !(shift > 0.0 && shift.is_finite()) {
            return Err(Error::Config(format!("smoothing shift must be positive, got {shift}")));
        }
        let g = self.layout.grid();
        let unit = PdeOperator::from_conductivity(g, vec![1.0; g.cells()])?;
        let (sx, sy) = (g.hx() * g.hx(), g.hy() * g.hy());
        let nx = g.nx();
        let chol = BandedCholesky::factor(g.cells(), nx, |i, j| {
            // Undo the 1/h^2 face scaling so K has unit weights.
            let h2 = if i - j == nx {
                sy
            } else if i - j == 1 {
                sx
            } else {
                0.0
            };
            if i == j {
                let (ci, cj) = (i % nx, i / nx);
                let deg = [ci > 0, ci + 1 < nx, cj > 0, cj + 1 < g.ny()].iter().filter(|b| **b).count();
                shift + deg as f64
            } else {
                unit.entry_unpinned(i, j) * h2
            }
        })?;
        self.smoother = Some((shift, chol));
        Ok(self)
    }

    pub fn smoothing(&self) -> Option<f64> {
        self.smoother.as_ref().map(|s| s.0)
    }

    pub fn layout(&self) -> &SourceReceiverLayout {
        &self.layout
    }

    pub fn transfer(&self) -> &Transfer {
        &self.transfer
    }

    fn prepared(&self, m: &[f64]) -> Result<Arc<Prepared>> {
        check_len("model", m.len(), self.layout.grid().cells())?;
        // Held across assembly so concurrent callers at a new model factor once.
        let mut cache = self.cache.lock().expect("cache lock");
        if let Some(p) = cache.iter().find(|p| p.m == m) {
            return Ok(Arc::clone(p));
        }
        let op = PdeOperator::assemble(self.layout.grid(), &self.transfer, m)?;
        let direct = match self.solver {
            PdeSolver::Direct => Some(op.factor()?),
            PdeSolver::Cg { .. } => None,
        };
        let dpsi = m.iter().map(|&v| self.transfer.dpsi(v)).collect();
        let prep = Arc::new(Prepared { m: m.to_vec(), op, direct, dpsi, fields: Mutex::new(HashMap::new()) });
        cache.push_front(Arc::clone(&prep));
        cache.truncate(CACHED_MODELS);
        Ok(prep)
    }

    fn solve(&self, prep: &Prepared, rhs: &[f64]) -> Result<Vec<f64>> {
        self.count.fetch_add(1, Ordering::Relaxed);
        match (&prep.direct, self.solver) {
            (Some(d), _) => Ok(d.solve(rhs)),
            (None, PdeSolver::Cg { tol, max_iters }) => solve_pde(&prep.op, rhs, tol, max_iters),
            (None, PdeSolver::Direct) => unreachable!("direct solver is factored on preparation"),
        }
    }

    fn field(&self, prep: &Prepared, q: &[f64]) -> Result<Arc<Vec<f64>>> {
        let k = key(q);
        {
            let fields = prep.fields.lock().expect("field lock");
            if let Some(u) = fields.get(&k).and_then(|v| v.iter().find(|(src, _)| src == q)) {
                return Ok(Arc::clone(&u.1));
            }
        }
        let u = Arc::new(self.solve(prep, q)?);
        prep.fields.lock().expect("field lock").entry(k).or_default().push((q.to_vec(), Arc::clone(&u)));
        Ok(u)
    }

    /// Conductivity `psi(m)`.
    pub fn conductivity(&self, m: &[f64]) -> Vec<f64> {
        self.transfer.apply(m)
    }
}

impl ForwardModel for DcResistivity {
    fn model_len(&self) -> usize {
        self.layout.grid().cells()
    }

    fn source_len(&self) -> usize {
        self.layout.grid().cells()
    }

    fn data_len(&self) -> usize {
        self.layout.num_receivers()
    }

    fn predict(&self, m: &[f64], q: &[f64]) -> Result<Vec<f64>> {
        check_len("source", q.len(), self.source_len())?;
        let prep = self.prepared(m)?;
        Ok(self.layout.project(&self.field(&prep, q)?))
    }

    fn jacobian_apply(&self, m: &[f64], q: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        check_len("source", q.len(), self.source_len())?;
        check_len("model direction", v.len(), self.model_len())?;
        let prep = self.prepared(m)?;
        let u = self.field(&prep, q)?;
        let w: Vec<f64> = v.iter().zip(&prep.dpsi).map(|(a, b)| a * b).collect();
        let r = prep.op.conductivity_derivative(&u, &w);
        let z = self.solve(&prep, &r)?;
        Ok(self.layout.project(&z).into_iter().map(|x| -x).collect())
    }

    fn jacobian_adjoint_apply(&self, m: &[f64], q: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        check_len("source", q.len(), self.source_len())?;
        check_len("data vector", y.len(), self.data_len())?;
        let prep = self.prepared(m)?;
        let u = self.field(&prep, q)?;
        let lambda = self.solve(&prep, &self.layout.project_adjoint(y))?;
        let g = prep.op.conductivity_derivative_adjoint(&u, &lambda);
        Ok(g.iter().zip(&prep.dpsi).map(|(a, b)| -a * b).collect())
    }

    fn precondition(&self, r: &[f64]) -> Vec<f64> {
        let mut z = r.to_vec();
        if let Some((_, chol)) = &self.smoother {
            chol.solve_in_place(&mut z);
        }
        z
    }

    fn solve_count(&self) -> u64 {
        self.count.load(Ordering::Relaxed)
    }

    fn concurrent_apply(&self) -> bool {
        true
    }
}
