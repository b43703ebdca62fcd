//! Direct solver for the face-coefficient elliptic problem
//! `-∇·(c ∇ψ) = r` on interior nodes with `ψ = 0` on the boundary.
//!
//! Interior unknowns are numbered row-major, which gives a symmetric
//! positive-definite matrix with half-bandwidth `nx - 2`. It is factored
//! once with a banded Cholesky decomposition and every solve is followed by
//! residual checks and iterative refinement.

use crate::error::{Error, Result};
use crate::grid::Grid2D;

/// Lower-band Cholesky factor. Row `k` stores `L[k][k-bw..=k]`.
#[derive(Debug, Clone)]
struct BandedCholesky {
    n: usize,
    bw: usize,
    l: Vec<f64>,
}

impl BandedCholesky {
    /// `band[k * (bw + 1) + (bw - d)]` holds `A[k][k - d]`.
    fn factor(n: usize, bw: usize, mut band: Vec<f64>) -> Result<Self> {
        let w = bw + 1;
        for i in 0..n {
            let j0 = i.saturating_sub(bw);
            for j in j0..=i {
                let mut s = band[i * w + (bw - (i - j))];
                let m0 = j0.max(j.saturating_sub(bw));
                for m in m0..j {
                    s -= band[i * w + (bw - (i - m))] * band[j * w + (bw - (j - m))];
                }
                if i == j {
                    if s <= 0.0 || !s.is_finite() {
                        return Err(Error::Consistency(format!(
                            "elliptic operator is not positive definite (pivot {s:e} at row {i})"
                        )));
                    }
                    band[i * w + bw] = s.sqrt();
                } else {
                    band[i * w + (bw - (i - j))] = s / band[j * w + bw];
                }
            }
        }
        Ok(Self { n, bw, l: band })
    }

    fn solve_in_place(&self, x: &mut [f64]) {
        let (n, bw, w) = (self.n, self.bw, self.bw + 1);
        for i in 0..n {
            let mut s = x[i];
            for m in i.saturating_sub(bw)..i {
                s -= self.l[i * w + (bw - (i - m))] * x[m];
            }
            x[i] = s / self.l[i * w + bw];
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for m in i + 1..n.min(i + bw + 1) {
                s -= self.l[m * w + (bw - (m - i))] * x[m];
            }
            x[i] = s / self.l[i * w + bw];
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct DirichletElliptic {
    grid: Grid2D,
    /// Coefficient on the face between `(i, j)` and `(i+1, j)`, indexed `j * (nx-1) + i`.
    cx: Vec<f64>,
    /// Coefficient on the face between `(i, j)` and `(i, j+1)`, indexed `j * nx + i`.
    cy: Vec<f64>,
    chol: BandedCholesky,
}

impl DirichletElliptic {
    pub fn laplacian(grid: Grid2D) -> Result<Self> {
        let cx = vec![1.0; (grid.nx - 1) * grid.ny];
        let cy = vec![1.0; grid.nx * (grid.ny - 1)];
        Self::new(grid, cx, cy)
    }

    pub fn new(grid: Grid2D, cx: Vec<f64>, cy: Vec<f64>) -> Result<Self> {
        let (nx, ny) = (grid.nx, grid.ny);
        assert_eq!(cx.len(), (nx - 1) * ny);
        assert_eq!(cy.len(), nx * (ny - 1));
        let (mx, my) = (nx - 2, ny - 2);
        let n = mx * my;
        let bw = mx;
        let w = bw + 1;
        let (ih1, ih2) = (1.0 / (grid.h1() * grid.h1()), 1.0 / (grid.h2() * grid.h2()));
        let mut band = vec![0.0; n * w];
        for jj in 0..my {
            for ii in 0..mx {
                let (i, j) = (ii + 1, jj + 1);
                let k = jj * mx + ii;
                let west = cx[j * (nx - 1) + i - 1];
                let east = cx[j * (nx - 1) + i];
                let south = cy[(j - 1) * nx + i];
                let north = cy[j * nx + i];
                band[k * w + bw] = (west + east) * ih1 + (south + north) * ih2;
                if ii > 0 {
                    band[k * w + bw - 1] = -west * ih1;
                }
                if jj > 0 {
                    band[k * w] = -south * ih2;
                }
            }
        }
        let chol = BandedCholesky::factor(n, bw, band)?;
        Ok(Self { grid, cx, cy, chol })
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    /// Interior entries of `-∇·(c ∇ψ)` for a full-grid `ψ`; boundary
    /// entries are zero.
    pub fn apply(&self, psi: &[f64], out: &mut [f64]) {
        let g = &self.grid;
        let (nx, ny) = (g.nx, g.ny);
        let (ih1, ih2) = (1.0 / (g.h1() * g.h1()), 1.0 / (g.h2() * g.h2()));
        out.iter_mut().for_each(|v| *v = 0.0);
        for j in 1..ny - 1 {
            for i in 1..nx - 1 {
                let k = j * nx + i;
                let fe = self.cx[j * (nx - 1) + i] * (psi[k + 1] - psi[k]);
                let fw = self.cx[j * (nx - 1) + i - 1] * (psi[k] - psi[k - 1]);
                let fn_ = self.cy[j * nx + i] * (psi[k + nx] - psi[k]);
                let fs = self.cy[(j - 1) * nx + i] * (psi[k] - psi[k - nx]);
                out[k] = -((fe - fw) * ih1 + (fn_ - fs) * ih2);
            }
        }
    }

    /// Solve to `tol` relative residual, refining at most `max_iter` times.
    /// Returns the full-grid solution (zero on the boundary) and its
    /// relative residual.
    pub fn solve(&self, rhs: &[f64], tol: f64, max_iter: usize) -> Result<(Vec<f64>, f64)> {
        let g = &self.grid;
        let (nx, ny) = (g.nx, g.ny);
        let mx = nx - 2;
        let mut psi = vec![0.0; g.len()];
        let mut r: Vec<f64> = rhs.to_vec();
        let mut ap = vec![0.0; g.len()];
        let mut work = vec![0.0; self.chol.n];
        let mut res = f64::INFINITY;
        for _ in 0..max_iter.max(1) {
            for j in 1..ny - 1 {
                for i in 1..nx - 1 {
                    work[(j - 1) * mx + i - 1] = r[j * nx + i];
                }
            }
            self.chol.solve_in_place(&mut work);
            for j in 1..ny - 1 {
                for i in 1..nx - 1 {
                    psi[j * nx + i] += work[(j - 1) * mx + i - 1];
                }
            }
            self.apply(&psi, &mut ap);
            res = relative_residual(g, &ap, rhs);
            if res <= tol {
                return Ok((psi, res));
            }
            for k in 0..r.len() {
                r[k] = rhs[k] - ap[k];
            }
        }
        Err(Error::NonConvergence {
            iterations: max_iter,
            residual: res,
        })
    }
}

fn relative_residual(g: &Grid2D, ap: &[f64], rhs: &[f64]) -> f64 {
    let mut num: f64 = 0.0;
    let mut den: f64 = 0.0;
    for (i, j) in g.interior() {
        let k = g.idx(i, j);
        num = num.max((ap[k] - rhs[k]).abs());
        den = den.max(rhs[k].abs());
    }
    num / (1.0 + den)
}
