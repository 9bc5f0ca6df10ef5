use serde::{Deserialize, Serialize};

use super::grid::Grid2D;
use crate::error::{check_len, Error, Result};

/// Dipole sources between left and right boundary cells, receivers on the
/// top and bottom boundary cells. Corner cells carry neither.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceReceiverLayout {
    grid: Grid2D,
    p: usize,
    /// Rows of the `p` source cells on each vertical side.
    source_rows: Vec<usize>,
    /// Receiver cells: bottom row left to right, then top row left to right.
    receivers: Vec<usize>,
}

impl SourceReceiverLayout {
    /// `p` source rows spread evenly over the `ny - 2` non-corner rows.
    pub fn new(grid: Grid2D, p: usize) -> Result<Self> {
        let avail = grid.ny() - 2;
        if p == 0 || p > avail {
            return Err(Error::Config(format!(
                "need 1 <= p <= {avail} source locations per side on a {}x{} grid, got {p}",
                grid.nx(),
                grid.ny()
            )));
        }
        let source_rows = (0..p).map(|i| 1 + (2 * i + 1) * avail / (2 * p)).collect();
        let mut receivers = Vec::with_capacity(2 * (grid.nx() - 2));
        for j in [0, grid.ny() - 1] {
            receivers.extend((1..grid.nx() - 1).map(|i| grid.index(i, j)));
        }
        Ok(Self { grid, p, source_rows, receivers })
    }

    pub fn grid(&self) -> Grid2D {
        self.grid
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// Number of experiments, `p^2`.
    pub fn num_sources(&self) -> usize {
        self.p * self.p
    }

    /// Number of receivers `l`.
    pub fn num_receivers(&self) -> usize {
        self.receivers.len()
    }

    pub fn source_rows(&self) -> &[usize] {
        &self.source_rows
    }

    pub fn receivers(&self) -> &[usize] {
        &self.receivers
    }

    /// Cells `(left, right)` of experiment `k = i p + j`: left row `i`,
    /// right row `j`.
    pub fn source_cells(&self, k: usize) -> (usize, usize) {
        let (i, j) = (k / self.p, k % self.p);
        let g = self.grid;
        (g.index(0, self.source_rows[i]), g.index(g.nx() - 1, self.source_rows[j]))
    }

    /// Source density of experiment `k`: `+1/h^2` and `-1/h^2`.
    pub fn source(&self, k: usize) -> Vec<f64> {
        let g = self.grid;
        let w = 1.0 / (g.hx() * g.hy());
        let (a, b) = self.source_cells(k);
        let mut q = vec![0.0; g.cells()];
        q[a] = w;
        q[b] = -w;
        q
    }

    pub fn sources(&self) -> Vec<Vec<f64>> {
        (0..self.num_sources()).map(|k| self.source(k)).collect()
    }

    /// `P u`
    pub fn project(&self, u: &[f64]) -> Vec<f64> {
        self.receivers.iter().map(|&c| u[c]).collect()
    }

    /// `P^T y`
    pub fn project_adjoint(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.grid.cells()];
        for (&c, v) in self.receivers.iter().zip(y) {
            out[c] += v;
        }
        out
    }
}

/// Copy each coarse cell value to its `factor^2` children.
pub fn prolong(coarse: Grid2D, factor: usize, v: &[f64]) -> Result<Vec<f64>> {
    check_len("coarse field", v.len(), coarse.cells())?;
    let fine = coarse.refined(factor)?;
    let mut out = vec![0.0; fine.cells()];
    for j in 0..fine.ny() {
        for i in 0..fine.nx() {
            out[fine.index(i, j)] = v[coarse.index(i / factor, j / factor)];
        }
    }
    Ok(out)
}

/// Average the `factor^2` children of each coarse cell.
pub fn restrict(coarse: Grid2D, factor: usize, v: &[f64]) -> Result<Vec<f64>> {
    let fine = coarse.refined(factor)?;
    check_len("fine field", v.len(), fine.cells())?;
    let mut out = vec![0.0; coarse.cells()];
    for j in 0..fine.ny() {
        for i in 0..fine.nx() {
            out[coarse.index(i / factor, j / factor)] += v[fine.index(i, j)];
        }
    }
    let w = 1.0 / (factor * factor) as f64;
    out.iter_mut().for_each(|x| *x *= w);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_and_corners() {
        let g = Grid2D::square(32).unwrap();
        let lay = SourceReceiverLayout::new(g, 15).unwrap();
        assert_eq!(lay.num_sources(), 225);
        assert_eq!(lay.num_receivers(), 60);
        let corners = [g.index(0, 0), g.index(31, 0), g.index(0, 31), g.index(31, 31)];
        assert!(lay.receivers().iter().all(|c| !corners.contains(c)));
        for k in 0..lay.num_sources() {
            let (a, b) = lay.source_cells(k);
            assert!(!corners.contains(&a) && !corners.contains(&b));
            assert_eq!(lay.source(k).iter().sum::<f64>(), 0.0);
        }
        let mut rows = lay.source_rows().to_vec();
        rows.dedup();
        assert_eq!(rows.len(), 15);
        assert!(SourceReceiverLayout::new(g, 31).is_err());
    }

    #[test]
    fn restriction_inverts_prolongation_and_keeps_mass() {
        let g = Grid2D::new(4, 5).unwrap();
        let v: Vec<f64> = (0..20).map(|k| k as f64 * 0.5 - 3.0).collect();
        let fine = prolong(g, 2, &v).unwrap();
        assert_eq!(restrict(g, 2, &fine).unwrap(), v);
        let fg = g.refined(2).unwrap();
        let mass_c: f64 = v.iter().sum::<f64>() * g.hx() * g.hy();
        let mass_f: f64 = fine.iter().sum::<f64>() * fg.hx() * fg.hy();
        assert!((mass_c - mass_f).abs() < 1e-12);
    }
}
