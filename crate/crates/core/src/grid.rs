//! Uniform 2D node grids, field containers and the finite-difference
//! stencils shared by every solver.
//!
//! Storage is row-major by `j` then `i`: node `(i, j)` lives at flat index
//! `j * nx + i`, where `i` runs along the first coordinate (ξ1 or x) and `j`
//! along the second. Node `(0, 0)` is the domain corner at the origin.
//!
//! Derivative operators only fill interior nodes; boundary entries of their
//! outputs are zero.

use crate::error::{Error, Result};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Grids with at least this many nodes get row-parallel stencils under
/// [`Exec::Auto`].
pub const PARALLEL_MIN_NODES: usize = 96 * 96;

/// Execution policy for stencil sweeps.
///
/// Every node is computed by the same expression regardless of policy, so
/// sequential and parallel sweeps give bit-identical output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Exec {
    /// Parallel above [`PARALLEL_MIN_NODES`], sequential below.
    #[default]
    Auto,
    Sequential,
    /// Row-parallel regardless of size. Falls back to sequential when the
    /// crate is built without the `parallel` feature.
    Parallel,
}

#[cfg(feature = "parallel")]
impl Exec {
    fn parallel_for(self, nodes: usize) -> bool {
        match self {
            Exec::Auto => nodes >= PARALLEL_MIN_NODES,
            Exec::Sequential => false,
            Exec::Parallel => true,
        }
    }
}

/// Apply `f(j, row)` to every interior row `1..ny-1` of `out`.
pub(crate) fn for_each_interior_row<F>(exec: Exec, grid: &Grid2D, out: &mut [f64], f: F)
where
    F: Fn(usize, &mut [f64]) + Sync + Send,
{
    let (nx, ny) = (grid.nx, grid.ny);
    debug_assert_eq!(out.len(), nx * ny);
    #[cfg(feature = "parallel")]
    if exec.parallel_for(out.len()) {
        out.par_chunks_mut(nx)
            .enumerate()
            .filter(|(j, _)| *j >= 1 && *j + 1 < ny)
            .for_each(|(j, row)| f(j, row));
        return;
    }
    let _ = exec;
    for (j, row) in out.chunks_mut(nx).enumerate().take(ny - 1).skip(1) {
        f(j, row);
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid2D {
    pub nx: usize,
    pub ny: usize,
    pub length1: f64,
    pub length2: f64,
}

impl Grid2D {
    pub fn new(nx: usize, ny: usize, length1: f64, length2: f64) -> Result<Self> {
        if nx < 3 || ny < 3 {
            return Err(Error::GridTooSmall { nx, ny });
        }
        if !(length1.is_finite() && length1 > 0.0) {
            return Err(Error::param("length1", format!("must be positive, got {length1}")));
        }
        if !(length2.is_finite() && length2 > 0.0) {
            return Err(Error::param("length2", format!("must be positive, got {length2}")));
        }
        Ok(Self {
            nx,
            ny,
            length1,
            length2,
        })
    }

    pub fn square(n: usize, length: f64) -> Result<Self> {
        Self::new(n, n, length, length)
    }

    /// Same node counts, new extents.
    pub fn with_lengths(&self, length1: f64, length2: f64) -> Result<Self> {
        Self::new(self.nx, self.ny, length1, length2)
    }

    #[inline]
    pub fn h1(&self) -> f64 {
        self.length1 / (self.nx - 1) as f64
    }

    #[inline]
    pub fn h2(&self) -> f64 {
        self.length2 / (self.ny - 1) as f64
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.nx && j < self.ny);
        j * self.nx + i
    }

    #[inline]
    pub fn position(&self, i: usize, j: usize) -> (f64, f64) {
        (i as f64 * self.h1(), j as f64 * self.h2())
    }

    #[inline]
    pub fn is_boundary(&self, i: usize, j: usize) -> bool {
        i == 0 || j == 0 || i + 1 == self.nx || j + 1 == self.ny
    }

    /// Iterator over interior `(i, j)` pairs in storage order.
    pub fn interior(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (1..self.ny - 1).flat_map(move |j| (1..self.nx - 1).map(move |i| (i, j)))
    }
}

/// A grid-sampled scalar (concentration, charge density, potential, ...).
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Grid2D,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: Grid2D, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Consistency(format!(
                "field has {} values, grid {}x{} needs {}",
                values.len(),
                grid.nx,
                grid.ny,
                grid.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid2D) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: Grid2D, c: f64) -> Self {
        Self {
            grid,
            values: vec![c; grid.len()],
        }
    }

    /// Sample `f(x, y)` at every node position, row by row.
    pub fn from_fn(grid: Grid2D, mut f: impl FnMut(f64, f64) -> f64) -> Self {
        Self::from_index_fn(grid, |i, j| {
            let (x, y) = grid.position(i, j);
            f(x, y)
        })
    }

    pub fn from_index_fn(grid: Grid2D, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                values.push(f(i, j));
            }
        }
        Self { grid, values }
    }

    #[inline]
    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.idx(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = self.grid.idx(i, j);
        self.values[k] = v;
    }

    /// Same data on a grid with the same node counts but different extents.
    pub fn regrid(self, grid: Grid2D) -> Result<Self> {
        Self::new(grid, self.values)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        ensure_same_grid(&self.grid, &other.grid)?;
        Ok(Self {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        if self.grid.nx != other.grid.nx || self.grid.ny != other.grid.ny {
            return Err(Error::GridMismatch);
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }

    /// First node holding NaN or ±Inf, if any.
    pub fn first_non_finite(&self) -> Option<(usize, usize)> {
        self.values
            .iter()
            .position(|v| !v.is_finite())
            .map(|k| (k % self.grid.nx, k / self.grid.nx))
    }

    /// Mirror along ξ1: node `(i, j)` takes the value of `(nx-1-i, j)`.
    pub fn reflect_xi1(&self) -> Self {
        let nx = self.grid.nx;
        Self::from_index_fn(self.grid, |i, j| self.get(nx - 1 - i, j))
    }

    /// Mirror along ξ2.
    pub fn reflect_xi2(&self) -> Self {
        let ny = self.grid.ny;
        Self::from_index_fn(self.grid, |i, j| self.get(i, ny - 1 - j))
    }

    /// Point reflection through the domain center.
    pub fn reflect_both(&self) -> Self {
        let (nx, ny) = (self.grid.nx, self.grid.ny);
        Self::from_index_fn(self.grid, |i, j| self.get(nx - 1 - i, ny - 1 - j))
    }
}

/// Node-centered vector field, typically an electric field.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    grid: Grid2D,
    pub ex: Vec<f64>,
    pub ey: Vec<f64>,
}

impl VectorField {
    pub fn new(grid: Grid2D, ex: Vec<f64>, ey: Vec<f64>) -> Result<Self> {
        if ex.len() != grid.len() || ey.len() != grid.len() {
            return Err(Error::Consistency(format!(
                "vector components have {}/{} values, grid needs {}",
                ex.len(),
                ey.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, ex, ey })
    }

    pub fn zeros(grid: Grid2D) -> Self {
        Self {
            grid,
            ex: vec![0.0; grid.len()],
            ey: vec![0.0; grid.len()],
        }
    }

    #[inline]
    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> (f64, f64) {
        let k = self.grid.idx(i, j);
        (self.ex[k], self.ey[k])
    }

    /// Largest node magnitude `sqrt(ex² + ey²)`.
    pub fn max_norm(&self) -> f64 {
        self.ex
            .iter()
            .zip(&self.ey)
            .fold(0.0, |m, (x, y)| m.max(x.hypot(*y)))
    }

    pub fn component_x(&self) -> ScalarField {
        ScalarField {
            grid: self.grid,
            values: self.ex.clone(),
        }
    }

    pub fn component_y(&self) -> ScalarField {
        ScalarField {
            grid: self.grid,
            values: self.ey.clone(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.ex.iter().chain(&self.ey).all(|v| v.is_finite())
    }
}

pub(crate) fn ensure_same_grid(a: &Grid2D, b: &Grid2D) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::GridMismatch)
    }
}

/// Five-point Laplacian on interior nodes, zero on the boundary.
///
/// The grid constructor already rejects grids below 3×3, so this cannot
/// fail.
pub fn discrete_laplacian(f: &ScalarField) -> ScalarField {
    discrete_laplacian_with(f, Exec::Auto)
}

pub fn discrete_laplacian_with(f: &ScalarField, exec: Exec) -> ScalarField {
    let grid = f.grid;
    let mut out = vec![0.0; grid.len()];
    laplacian_into(exec, &grid, &f.values, &mut out);
    ScalarField { grid, values: out }
}

pub(crate) fn laplacian_into(exec: Exec, grid: &Grid2D, f: &[f64], out: &mut [f64]) {
    let nx = grid.nx;
    let inv_h1sq = 1.0 / (grid.h1() * grid.h1());
    let inv_h2sq = 1.0 / (grid.h2() * grid.h2());
    for_each_interior_row(exec, grid, out, |j, row| {
        let c = &f[j * nx..(j + 1) * nx];
        let s = &f[(j - 1) * nx..j * nx];
        let n = &f[(j + 1) * nx..(j + 2) * nx];
        for i in 1..nx - 1 {
            row[i] = laplacian_at(s, c, n, i, inv_h1sq, inv_h2sq);
        }
    });
}

/// First-order upwind evaluation of `v1 ∂f/∂ξ1 + v2 ∂f/∂ξ2` on interior
/// nodes. Per axis: backward difference for positive velocity, forward for
/// negative, central for zero.
pub fn upwind_gradient(f: &ScalarField, v1: f64, v2: f64) -> ScalarField {
    upwind_gradient_with(f, v1, v2, Exec::Auto)
}

pub fn upwind_gradient_with(f: &ScalarField, v1: f64, v2: f64, exec: Exec) -> ScalarField {
    let grid = f.grid;
    let mut out = vec![0.0; grid.len()];
    upwind_into(exec, &grid, &f.values, v1, v2, &mut out);
    ScalarField { grid, values: out }
}

/// Five-point Laplacian at column `i` of row `c`, with `s`/`n` the rows
/// below and above.
#[inline(always)]
pub(crate) fn laplacian_at(s: &[f64], c: &[f64], n: &[f64], i: usize, inv_h1sq: f64, inv_h2sq: f64) -> f64 {
    // (a + b) - 2c keeps the stencil exactly mirror-symmetric.
    let d1 = (c[i - 1] + c[i + 1] - 2.0 * c[i]) * inv_h1sq;
    let d2 = (s[i] + n[i] - 2.0 * c[i]) * inv_h2sq;
    d1 + d2
}

#[inline(always)]
pub(crate) fn upwind_at(s: &[f64], c: &[f64], n: &[f64], i: usize, v1: f64, v2: f64, h1: f64, h2: f64) -> f64 {
    upwind_axis(v1, c[i - 1], c[i], c[i + 1], h1) + upwind_axis(v2, s[i], c[i], n[i], h2)
}

#[inline(always)]
fn upwind_axis(v: f64, back: f64, here: f64, fwd: f64, h: f64) -> f64 {
    if v > 0.0 {
        v * ((here - back) / h)
    } else if v < 0.0 {
        v * ((fwd - here) / h)
    } else {
        v * ((fwd - back) / (2.0 * h))
    }
}

pub(crate) fn upwind_into(exec: Exec, grid: &Grid2D, f: &[f64], v1: f64, v2: f64, out: &mut [f64]) {
    let nx = grid.nx;
    let (h1, h2) = (grid.h1(), grid.h2());
    for_each_interior_row(exec, grid, out, |j, row| {
        let c = &f[j * nx..(j + 1) * nx];
        let s = &f[(j - 1) * nx..j * nx];
        let n = &f[(j + 1) * nx..(j + 2) * nx];
        for i in 1..nx - 1 {
            row[i] = upwind_at(s, c, n, i, v1, v2, h1, h2);
        }
    });
}

/// Gradient by central differences on interior nodes and second-order
/// one-sided differences on the boundary.
pub fn gradient(f: &ScalarField) -> VectorField {
    let g = f.grid;
    let (nx, ny) = (g.nx, g.ny);
    let (h1, h2) = (g.h1(), g.h2());
    let v = &f.values;
    let at = |i: usize, j: usize| v[j * nx + i];
    let mut ex = vec![0.0; g.len()];
    let mut ey = vec![0.0; g.len()];
    for j in 0..ny {
        for i in 0..nx {
            let k = j * nx + i;
            ex[k] = if i == 0 {
                (-3.0 * at(0, j) + 4.0 * at(1, j) - at(2, j)) / (2.0 * h1)
            } else if i == nx - 1 {
                (3.0 * at(i, j) - 4.0 * at(i - 1, j) + at(i - 2, j)) / (2.0 * h1)
            } else {
                (at(i + 1, j) - at(i - 1, j)) / (2.0 * h1)
            };
            ey[k] = if j == 0 {
                (-3.0 * at(i, 0) + 4.0 * at(i, 1) - at(i, 2)) / (2.0 * h2)
            } else if j == ny - 1 {
                (3.0 * at(i, j) - 4.0 * at(i, j - 1) + at(i, j - 2)) / (2.0 * h2)
            } else {
                (at(i, j + 1) - at(i, j - 1)) / (2.0 * h2)
            };
        }
    }
    VectorField { grid: g, ex, ey }
}
