use super::grid::Grid2D;
use super::transfer::Transfer;
use crate::error::{check_len, Error, Result};
use crate::linalg::{pcg, BandedCholesky, PcgOutcome};

fn harmonic(a: f64, b: f64) -> f64 {
    2.0 * a * b / (a + b)
}

/// `d harmonic(a, b) / da`
fn harmonic_da(a: f64, b: f64) -> f64 {
    let s = a + b;
    2.0 * b * b / (s * s)
}

/// Cell-centered finite-volume discretization of `-div(mu grad u)` with
/// zero-flux (Neumann) boundaries and harmonic face averaging, plus the
/// rank-one term `gamma 1 1^T` that pins the mean of the solution to zero.
///
/// For a source with zero sum the pinned solution solves the Neumann
/// problem exactly and has zero mean.
#[derive(Debug, Clone)]
pub struct PdeOperator {
    grid: Grid2D,
    mu: Vec<f64>,
    /// Transmissibility of the face between `(i, j)` and `(i + 1, j)`,
    /// indexed `i + (nx - 1) j`.
    tx: Vec<f64>,
    /// Between `(i, j)` and `(i, j + 1)`, indexed `i + nx j`.
    ty: Vec<f64>,
    diag: Vec<f64>,
    gamma: f64,
}

impl PdeOperator {
    /// Assemble from cellwise conductivity.
    pub fn from_conductivity(grid: Grid2D, mu: Vec<f64>) -> Result<Self> {
        check_len("conductivity", mu.len(), grid.cells())?;
        if let Some(bad) = mu.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::Domain(format!("conductivity must be positive and finite, found {bad}")));
        }
        let (nx, ny) = (grid.nx(), grid.ny());
        let (ix2, iy2) = (1.0 / (grid.hx() * grid.hx()), 1.0 / (grid.hy() * grid.hy()));
        let mut tx = vec![0.0; (nx - 1) * ny];
        let mut ty = vec![0.0; nx * (ny - 1)];
        let mut diag = vec![0.0; grid.cells()];
        for j in 0..ny {
            for i in 0..nx - 1 {
                let (a, b) = (grid.index(i, j), grid.index(i + 1, j));
                let t = harmonic(mu[a], mu[b]) * ix2;
                tx[i + (nx - 1) * j] = t;
                diag[a] += t;
                diag[b] += t;
            }
        }
        for j in 0..ny - 1 {
            for i in 0..nx {
                let (a, b) = (grid.index(i, j), grid.index(i, j + 1));
                let t = harmonic(mu[a], mu[b]) * iy2;
                ty[i + nx * j] = t;
                diag[a] += t;
                diag[b] += t;
            }
        }
        let gamma = diag.iter().sum::<f64>() / (grid.cells() * grid.cells()) as f64;
        Ok(Self { grid, mu, tx, ty, diag, gamma })
    }

    /// Assemble `L(m)` with `mu = psi(m)`.
    pub fn assemble(grid: Grid2D, transfer: &Transfer, m: &[f64]) -> Result<Self> {
        check_len("model", m.len(), grid.cells())?;
        if let Some(bad) = m.iter().find(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("model contains non-finite value {bad}")));
        }
        let mu = transfer.apply(m);
        debug_assert!(mu.iter().all(|v| *v >= transfer.mu_min));
        Self::from_conductivity(grid, mu)
    }

    pub fn grid(&self) -> Grid2D {
        self.grid
    }

    pub fn conductivity(&self) -> &[f64] {
        &self.mu
    }

    /// Coefficient of the pinning term.
    pub fn pin_weight(&self) -> f64 {
        self.gamma
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diag
    }

    /// Visit every interior face as `(cell a, cell b, transmissibility, 1/h^2)`.
    fn for_each_face(&self, mut f: impl FnMut(usize, usize, f64, f64)) {
        let g = self.grid;
        let (nx, ny) = (g.nx(), g.ny());
        let (ix2, iy2) = (1.0 / (g.hx() * g.hx()), 1.0 / (g.hy() * g.hy()));
        for j in 0..ny {
            for i in 0..nx - 1 {
                f(g.index(i, j), g.index(i + 1, j), self.tx[i + (nx - 1) * j], ix2);
            }
        }
        for j in 0..ny - 1 {
            for i in 0..nx {
                f(g.index(i, j), g.index(i, j + 1), self.ty[i + nx * j], iy2);
            }
        }
    }

    /// Neumann operator without the pinning term.
    pub fn apply_unpinned(&self, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; u.len()];
        self.for_each_face(|a, b, t, _| {
            let flux = t * (u[a] - u[b]);
            out[a] += flux;
            out[b] -= flux;
        });
        out
    }

    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        let mut out = self.apply_unpinned(u);
        let shift = self.gamma * u.iter().sum::<f64>();
        out.iter_mut().for_each(|v| *v += shift);
        out
    }

    /// Entry `(r, c)` of the unpinned operator.
    pub fn entry_unpinned(&self, r: usize, c: usize) -> f64 {
        let g = self.grid;
        let nx = g.nx();
        if r == c {
            return self.diag[r];
        }
        let (lo, hi) = (r.min(c), r.max(c));
        let (i, j) = (lo % nx, lo / nx);
        if hi == lo + 1 && i + 1 < nx {
            -self.tx[i + (nx - 1) * j]
        } else if hi == lo + nx {
            -self.ty[i + nx * j]
        } else {
            0.0
        }
    }

    /// `G(u) w`: derivative of `L(mu) u` with respect to `mu` in direction `w`.
    pub fn conductivity_derivative(&self, u: &[f64], w: &[f64]) -> Vec<f64> {
        let mu = &self.mu;
        let mut out = vec![0.0; u.len()];
        self.for_each_face(|a, b, _, ih2| {
            let dt = (harmonic_da(mu[a], mu[b]) * w[a] + harmonic_da(mu[b], mu[a]) * w[b]) * ih2;
            let flux = dt * (u[a] - u[b]);
            out[a] += flux;
            out[b] -= flux;
        });
        out
    }

    /// `G(u)^T z`
    pub fn conductivity_derivative_adjoint(&self, u: &[f64], z: &[f64]) -> Vec<f64> {
        let mu = &self.mu;
        let mut out = vec![0.0; u.len()];
        self.for_each_face(|a, b, _, ih2| {
            let c = (u[a] - u[b]) * (z[a] - z[b]) * ih2;
            out[a] += harmonic_da(mu[a], mu[b]) * c;
            out[b] += harmonic_da(mu[b], mu[a]) * c;
        });
        out
    }

    /// Factor for repeated direct solves.
    pub fn factor(&self) -> Result<DirectSolver> {
        let n = self.grid.cells();
        // Fixing cell 0 removes the constant null space without widening the band.
        let anchor = self.diag[0];
        let chol = BandedCholesky::factor(n, self.grid.nx(), |i, j| {
            let v = self.entry_unpinned(i, j);
            if i == 0 && j == 0 {
                v + anchor
            } else {
                v
            }
        })?;
        Ok(DirectSolver { chol, gamma: self.gamma })
    }
}

/// Direct solver for the pinned operator.
///
/// The pinned operator maps constants to `gamma N` times themselves and
/// zero-sum vectors to zero-sum vectors, so a right-hand side is split into
/// its mean and a zero-sum part. The zero-sum part is solved through the
/// Neumann operator with one cell anchored, then shifted to zero mean.
#[derive(Debug, Clone)]
pub struct DirectSolver {
    chol: BandedCholesky,
    gamma: f64,
}

impl DirectSolver {
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = b.len() as f64;
        let mean = b.iter().sum::<f64>() / n;
        let mut x: Vec<f64> = b.iter().map(|v| v - mean).collect();
        self.chol.solve_in_place(&mut x);
        let shift = x.iter().sum::<f64>() / n - mean / (self.gamma * n);
        x.iter_mut().for_each(|v| *v -= shift);
        x
    }
}

/// Jacobi-preconditioned CG solve of `L u = q` for the pinned operator.
/// Fails with a numerical error when the relative residual stays above
/// `cg_tol` after `cg_max_iters` iterations.
pub fn solve_pde(op: &PdeOperator, q: &[f64], cg_tol: f64, cg_max_iters: usize) -> Result<Vec<f64>> {
    check_len("source", q.len(), op.grid.cells())?;
    let inv: Vec<f64> = op.diag.iter().map(|d| 1.0 / (d + op.gamma)).collect();
    let PcgOutcome { x, converged, relative_residual, iterations, .. } =
        pcg(|v| Ok(op.apply(v)), |r| r.iter().zip(&inv).map(|(a, b)| a * b).collect(), q, cg_max_iters, cg_tol)?;
    if !converged {
        return Err(Error::Numerical(format!(
            "PDE solve did not converge: relative residual {relative_residual:e} after {iterations} iterations"
        )));
    }
    Ok(x)
}

/// How forward problems are solved.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum PdeSolver {
    /// Banded Cholesky, factored once per model.
    #[default]
    Direct,
    Cg {
        tol: f64,
        max_iters: usize,
    },
}
