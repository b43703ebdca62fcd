//! Ambipolar electric field recovery.
//!
//! Under quasineutrality the electron concentration alone fixes the
//! divergence of the electron flux carried by the field:
//!
//! ```text
//! ∇·(N_e E) = β [∂N_e/∂t - (α_i N N_e - α_r N_e³) + v·∇N_e],
//! β = (D_i - D_e) / (D_e μ_i + D_i μ_e)
//! ```
//!
//! One scalar equation does not determine two field components. The field
//! is closed as irrotational, `E = -∇ψ`, with a grounded boundary `ψ = 0`,
//! which turns recovery into the variable-coefficient elliptic problem
//! `∇·(N_e ∇ψ) = -g`. The operator is assembled in flux form with `N_e`
//! averaged onto cell faces; the returned node field is the average of the
//! two adjacent face fields (a central difference of `ψ`).
//!
//! Everything here is dimensional; convert dimensionless solutions with
//! [`crate::nondim::to_dimensional`] first.

use crate::error::{Error, Result};
use crate::grid::{ensure_same_grid, gradient, Grid2D, ScalarField, VectorField};
use crate::linalg::DirichletElliptic;
use crate::nondim::PhysicalParams;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldRecoverySettings {
    pub elliptic_tol: f64,
    pub max_iter: usize,
}

impl Default for FieldRecoverySettings {
    fn default() -> Self {
        Self {
            elliptic_tol: 1e-10,
            max_iter: 100_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecoveredField {
    /// ψ with `E = -∇ψ`, zero on the boundary.
    pub potential: ScalarField,
    pub field: VectorField,
    /// `max|∇·(N_e E) - g| / (1 + max|g|)` over interior nodes.
    pub residual: f64,
}

/// Right-hand side `g` of the field equation. Spatial derivatives use
/// central differences inside and one-sided differences on the boundary.
pub fn field_divergence_source(
    n_e: &ScalarField,
    dn_dt: &ScalarField,
    p: &PhysicalParams,
    (v_x, v_y): (f64, f64),
) -> Result<ScalarField> {
    ensure_same_grid(n_e.grid(), dn_dt.grid())?;
    let beta = p.field_coupling();
    let grad = gradient(n_e);
    let values = n_e
        .values()
        .iter()
        .zip(dn_dt.values())
        .zip(grad.ex.iter().zip(&grad.ey))
        .map(|((&n, &dt), (&gx, &gy))| beta * (dt - p.production(n, n) + v_x * gx + v_y * gy))
        .collect();
    ScalarField::new(*n_e.grid(), values)
}

fn face_coefficients(n_e: &ScalarField) -> (Vec<f64>, Vec<f64>) {
    let g = n_e.grid();
    let (nx, ny) = (g.nx, g.ny);
    let v = n_e.values();
    let mut cx = Vec::with_capacity((nx - 1) * ny);
    for j in 0..ny {
        for i in 0..nx - 1 {
            cx.push(0.5 * (v[j * nx + i] + v[j * nx + i + 1]));
        }
    }
    let mut cy = Vec::with_capacity(nx * (ny - 1));
    for j in 0..ny - 1 {
        for i in 0..nx {
            cy.push(0.5 * (v[j * nx + i] + v[(j + 1) * nx + i]));
        }
    }
    (cx, cy)
}

/// Solve for the irrotational field whose flux divergence `∇·(N_e E)`
/// matches `g` on interior nodes.
pub fn recover_field(
    n_e: &ScalarField,
    g: &ScalarField,
    settings: &FieldRecoverySettings,
) -> Result<RecoveredField> {
    ensure_same_grid(n_e.grid(), g.grid())?;
    if !(settings.elliptic_tol > 0.0) || settings.max_iter == 0 {
        return Err(Error::param(
            "elliptic_tol",
            "tolerance must be positive and max_iter at least 1",
        ));
    }
    let grid: Grid2D = *n_e.grid();
    if let Some(k) = n_e.values().iter().position(|v| !(*v > 0.0)) {
        return Err(Error::NonPositiveConcentration {
            i: k % grid.nx,
            j: k / grid.nx,
            value: n_e.values()[k],
        });
    }
    let (cx, cy) = face_coefficients(n_e);
    let op = DirichletElliptic::new(grid, cx, cy)?;
    let (psi, residual) = op.solve(g.values(), settings.elliptic_tol, settings.max_iter)?;
    let potential = ScalarField::new(grid, psi)?;
    let grad = gradient(&potential);
    let field = VectorField::new(
        grid,
        grad.ex.iter().map(|v| -v).collect(),
        grad.ey.iter().map(|v| -v).collect(),
    )?;
    Ok(RecoveredField {
        potential,
        field,
        residual,
    })
}

/// Discrete `∇·(N_e E)` on interior nodes for `E = -∇ψ`, built from face
/// fluxes exactly as the recovery operator is. Boundary entries are zero.
pub fn flux_divergence(n_e: &ScalarField, potential: &ScalarField) -> Result<ScalarField> {
    ensure_same_grid(n_e.grid(), potential.grid())?;
    let (cx, cy) = face_coefficients(n_e);
    let op = DirichletElliptic::new(*n_e.grid(), cx, cy)?;
    let mut out = vec![0.0; n_e.grid().len()];
    op.apply(potential.values(), &mut out);
    ScalarField::new(*n_e.grid(), out)
}
