//! Small dense-vector kernels, preconditioned conjugate gradients, and a
//! banded Cholesky factorization.

use crate::error::{Error, Result};

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `y += alpha * x`
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn scale(alpha: f64, x: &mut [f64]) {
    for v in x.iter_mut() {
        *v *= alpha;
    }
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PcgOutcome {
    pub x: Vec<f64>,
    /// Number of operator applications performed.
    pub iterations: usize,
    /// Final `||b - A x|| / ||b||`.
    pub relative_residual: f64,
    pub converged: bool,
    /// Set when a search direction with `p^T A p <= 0` was met; `x` is the
    /// iterate reached before it.
    pub breakdown: bool,
}

/// Preconditioned conjugate gradients from a zero initial guess.
///
/// `apply` computes `A p`, `precond` computes `M^{-1} r`. Stops after
/// `max_iters` operator applications or once the relative residual drops to
/// `tol`, whichever comes first.
pub fn pcg<A, M>(mut apply: A, mut precond: M, b: &[f64], max_iters: usize, tol: f64) -> Result<PcgOutcome>
where
    A: FnMut(&[f64]) -> Result<Vec<f64>>,
    M: FnMut(&[f64]) -> Vec<f64>,
{
    let n = b.len();
    let mut x = vec![0.0; n];
    let bnorm = norm(b);
    if bnorm == 0.0 {
        return Ok(PcgOutcome { x, iterations: 0, relative_residual: 0.0, converged: true, breakdown: false });
    }
    let mut r = b.to_vec();
    let mut z = precond(&r);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut rel = 1.0;
    let mut iterations = 0;
    while iterations < max_iters {
        let ap = apply(&p)?;
        if ap.len() != n {
            return Err(Error::Dimension(format!("operator returned length {}, expected {n}", ap.len())));
        }
        iterations += 1;
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            log::warn!("pcg: non-positive curvature {pap:e} at iteration {iterations}");
            return Ok(PcgOutcome { x, iterations, relative_residual: rel, converged: false, breakdown: true });
        }
        let alpha = rz / pap;
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &ap, &mut r);
        rel = norm(&r) / bnorm;
        if rel <= tol {
            return Ok(PcgOutcome { x, iterations, relative_residual: rel, converged: true, breakdown: false });
        }
        z = precond(&r);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for (pi, zi) in p.iter_mut().zip(&z) {
            *pi = zi + beta * *pi;
        }
    }
    Ok(PcgOutcome { x, iterations, relative_residual: rel, converged: false, breakdown: false })
}

/// Cholesky factor of a symmetric positive definite band matrix.
///
/// Row `i` stores the entries `L[i][i-bw..=i]` (clipped at column 0) in
/// `bw + 1` slots, the diagonal last.
#[derive(Debug, Clone)]
pub struct BandedCholesky {
    n: usize,
    bw: usize,
    data: Vec<f64>,
}

impl BandedCholesky {
    /// Factor the matrix whose lower band is produced by `entry(i, j)` for
    /// `i - bw <= j <= i`.
    pub fn factor(n: usize, bw: usize, entry: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let w = bw + 1;
        let mut data = vec![0.0; n * w];
        for i in 0..n {
            let j0 = i.saturating_sub(bw);
            for j in j0..=i {
                data[i * w + (j + bw - i)] = entry(i, j);
            }
        }
        // at(i, j) for i - bw <= j <= i
        let idx = |i: usize, j: usize| i * w + (j + bw - i);
        for i in 0..n {
            let j0 = i.saturating_sub(bw);
            for j in j0..=i {
                let k0 = j0.max(j.saturating_sub(bw));
                let mut s = data[idx(i, j)];
                for k in k0..j {
                    s -= data[idx(i, k)] * data[idx(j, k)];
                }
                if j == i {
                    if !(s > 0.0) {
                        return Err(Error::Numerical(format!(
                            "banded Cholesky: matrix not positive definite at row {i} (pivot {s:e})"
                        )));
                    }
                    data[idx(i, i)] = s.sqrt();
                } else {
                    data[idx(i, j)] = s / data[idx(j, j)];
                }
            }
        }
        Ok(Self { n, bw, data })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solve `L L^T x = b` in place.
    #[allow(clippy::needless_range_loop)]
    pub fn solve_in_place(&self, x: &mut [f64]) {
        let (n, bw, w) = (self.n, self.bw, self.bw + 1);
        let at = |i: usize, j: usize| self.data[i * w + (j + bw - i)];
        for i in 0..n {
            let mut s = x[i];
            for k in i.saturating_sub(bw)..i {
                s -= at(i, k) * x[k];
            }
            x[i] = s / at(i, i);
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in (i + 1)..n.min(i + bw + 1) {
                s -= at(k, i) * x[k];
            }
            x[i] = s / at(i, i);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn tridiag(n: usize) -> impl Fn(usize, usize) -> f64 {
        move |i, j| {
            let _ = n;
            if i == j {
                4.0
            } else if i == j + 1 {
                -1.0
            } else {
                0.0
            }
        }
    }

    fn tridiag_apply(x: &[f64]) -> Vec<f64> {
        let n = x.len();
        (0..n)
            .map(|i| {
                let mut v = 4.0 * x[i];
                if i > 0 {
                    v -= x[i - 1];
                }
                if i + 1 < n {
                    v -= x[i + 1];
                }
                v
            })
            .collect()
    }

    #[test]
    fn pcg_solves_spd_system() {
        let b: Vec<f64> = (0..30).map(|i| (i as f64).sin()).collect();
        let out = pcg(|p| Ok(tridiag_apply(p)), |r| r.iter().map(|v| v / 4.0).collect(), &b, 200, 1e-12).unwrap();
        assert!(out.converged);
        let ax = tridiag_apply(&out.x);
        for (u, v) in ax.iter().zip(&b) {
            assert_abs_diff_eq!(u, v, epsilon = 1e-10);
        }
    }

    #[test]
    fn pcg_respects_iteration_cap_and_zero_rhs() {
        let b = vec![1.0; 50];
        let out = pcg(|p| Ok(tridiag_apply(p)), |r| r.to_vec(), &b, 3, 1e-14).unwrap();
        assert_eq!(out.iterations, 3);
        assert!(!out.converged);
        let z = pcg(|p| Ok(tridiag_apply(p)), |r| r.to_vec(), &[0.0; 4], 3, 1e-14).unwrap();
        assert_eq!(z.iterations, 0);
        assert_eq!(z.x, vec![0.0; 4]);
    }

    #[test]
    fn pcg_flags_indefinite_direction() {
        let out = pcg(|p| Ok(p.iter().map(|v| -v).collect()), |r| r.to_vec(), &[1.0, 2.0], 10, 1e-12).unwrap();
        assert!(out.breakdown);
        assert_eq!(out.x, vec![0.0, 0.0]);
    }

    #[test]
    fn banded_cholesky_matches_pcg() {
        let n = 40;
        let chol = BandedCholesky::factor(n, 1, tridiag(n)).unwrap();
        let b: Vec<f64> = (0..n).map(|i| (i as f64 * 0.3).cos()).collect();
        let mut x = b.clone();
        chol.solve_in_place(&mut x);
        let ax = tridiag_apply(&x);
        for (u, v) in ax.iter().zip(&b) {
            assert_abs_diff_eq!(u, v, epsilon = 1e-12);
        }
    }

    #[test]
    fn banded_cholesky_rejects_indefinite() {
        let r = BandedCholesky::factor(3, 1, |i, j| if i == j { -1.0 } else { 0.0 });
        assert!(matches!(r, Err(Error::Numerical(_))));
    }
}
