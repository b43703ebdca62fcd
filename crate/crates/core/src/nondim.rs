//! Physical parameters, characteristic scales and the dimensionless
//! boundary/initial-value problem.
//!
//! Units are Gaussian (CGS): concentrations in cm⁻³, lengths in cm, charge
//! in statcoulomb, fields in statvolt/cm.
//!
//! The scale formulas are applied exactly as stated for the model:
//!
//! ```text
//! n_inf  = sqrt(α_i N / α_r)
//! D_a    = (D_e μ_i + D_i μ_e) / (μ_e + μ_i)
//! x*     = D_a α_i / D_i²
//! t*     = D_a α_i² / D_i⁴
//! φ      = α_i N t*
//! v_scale = D_i² / α_i
//! ```
//!
//! With these, `D_a t* / x*² = 1` and `v t* / x* = v / v_scale`, so the
//! dimensional ambipolar equation maps onto
//! `∂u/∂τ - Δu + v·∇u = φ (u - u³)` term by term.

use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::grid::{Grid2D, ScalarField};
use crate::snapshot;

/// Boltzmann constant in erg/K.
pub const BOLTZMANN_CGS: f64 = 1.380_649e-16;

/// Elementary charge in statcoulomb.
pub const ELEMENTARY_CHARGE_ESU: f64 = 4.803_204_712_570_263e-10;

/// Corner values of adjacent edges must agree to this absolute tolerance.
pub const CORNER_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalParams {
    /// Electron diffusivity D_e.
    pub d_e: f64,
    /// Ion diffusivity D_i.
    pub d_i: f64,
    pub mu_e: f64,
    pub mu_i: f64,
    /// Ionization coefficient α_i.
    pub alpha_i: f64,
    /// Recombination coefficient α_r.
    pub alpha_r: f64,
    /// Neutral concentration N, constant in space and time.
    pub n_neutral: f64,
    pub e_charge: f64,
    /// Effective temperature shared by both species, in kelvin.
    pub temperature: f64,
}

impl PhysicalParams {
    pub fn validate(&self) -> Result<()> {
        let fields: [(&'static str, f64); 9] = [
            ("d_e", self.d_e),
            ("d_i", self.d_i),
            ("mu_e", self.mu_e),
            ("mu_i", self.mu_i),
            ("alpha_i", self.alpha_i),
            ("alpha_r", self.alpha_r),
            ("n_neutral", self.n_neutral),
            ("e_charge", self.e_charge),
            ("temperature", self.temperature),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::param(name, format!("must be positive and finite, got {v}")));
            }
        }
        Ok(())
    }

    /// `kT/e` in statvolt.
    pub fn thermal_voltage(&self) -> f64 {
        BOLTZMANN_CGS * self.temperature / self.e_charge
    }

    /// Check `D_e/μ_e = D_i/μ_i = kT/e` to a relative tolerance.
    pub fn check_einstein(&self, rel_tol: f64) -> Result<()> {
        let kt_e = self.thermal_voltage();
        for (name, ratio) in [("mu_e", self.d_e / self.mu_e), ("mu_i", self.d_i / self.mu_i)] {
            let rel = (ratio - kt_e).abs() / kt_e;
            if rel > rel_tol {
                return Err(Error::param(
                    name,
                    format!(
                        "Einstein relation violated: D/mu = {ratio:e}, kT/e = {kt_e:e} (relative error {rel:e})"
                    ),
                ));
            }
        }
        Ok(())
    }

    /// Replace both mobilities with the Einstein values for the current
    /// diffusivities, temperature and charge.
    pub fn with_einstein_mobilities(mut self) -> Result<Self> {
        self.mu_e = mobility_from_diffusivity(self.d_e, self.temperature, self.e_charge)?;
        self.mu_i = mobility_from_diffusivity(self.d_i, self.temperature, self.e_charge)?;
        Ok(self)
    }

    /// `(D_e μ_i + D_i μ_e) / (μ_e + μ_i)`.
    pub fn d_ambipolar(&self) -> f64 {
        (self.d_e * self.mu_i + self.d_i * self.mu_e) / (self.mu_e + self.mu_i)
    }

    /// Coupling `(D_i - D_e) / (D_e μ_i + D_i μ_e)` of the ambipolar field
    /// equation.
    pub fn field_coupling(&self) -> f64 {
        (self.d_i - self.d_e) / (self.d_e * self.mu_i + self.d_i * self.mu_e)
    }

    /// Net production `α_i N n_e - α_r n_e² n_i` from ē + ē + i ↔ a + ē.
    #[inline]
    pub fn production(&self, n_e: f64, n_i: f64) -> f64 {
        self.alpha_i * self.n_neutral * n_e - self.alpha_r * n_e * n_e * n_i
    }

    /// Equilibrium concentration `sqrt(α_i N / α_r)`.
    pub fn n_inf(&self) -> f64 {
        (self.alpha_i * self.n_neutral / self.alpha_r).sqrt()
    }
}

/// `μ = D e / (k_B T)` with [`BOLTZMANN_CGS`].
pub fn mobility_from_diffusivity(d: f64, temperature: f64, e_charge: f64) -> Result<f64> {
    for (name, v) in [("d", d), ("temperature", temperature), ("e_charge", e_charge)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::param(name, format!("must be positive, got {v}")));
        }
    }
    Ok(d * e_charge / (BOLTZMANN_CGS * temperature))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scales {
    /// Length scale; the same for both axes.
    pub x_star: f64,
    pub t_star: f64,
    /// Concentration scale N_e(∞).
    pub n_inf: f64,
    pub phi: f64,
    pub d_ambipolar: f64,
    /// Velocity scale D_i² / α_i.
    pub v_scale: f64,
}

pub fn compute_scales(p: &PhysicalParams) -> Result<Scales> {
    p.validate()?;
    let mix = (p.d_i * p.mu_e + p.d_e * p.mu_i) / (p.mu_e + p.mu_i);
    let di2 = p.d_i * p.d_i;
    let di4 = di2 * di2;
    let t_star = mix * p.alpha_i * p.alpha_i / di4;
    let s = Scales {
        x_star: mix * p.alpha_i / di2,
        t_star,
        n_inf: p.n_inf(),
        phi: p.alpha_i * p.n_neutral * mix * p.alpha_i * p.alpha_i / di4,
        d_ambipolar: p.d_ambipolar(),
        v_scale: di2 / p.alpha_i,
    };
    for (name, v) in [
        ("x_star", s.x_star),
        ("t_star", s.t_star),
        ("n_inf", s.n_inf),
        ("phi", s.phi),
        ("v_scale", s.v_scale),
    ] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::param(name, format!("scale is not positive and finite: {v}")));
        }
    }
    Ok(s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Xi1,
    Xi2,
    /// Plane along the diagonal; `start` at the origin corner, `end` at the
    /// opposite corner.
    Both,
}

/// Dirichlet data along one edge. Profiles along the left/right edges are
/// indexed by `j`, along the bottom/top edges by `i`.
#[derive(Debug, Clone, PartialEq)]
pub enum EdgeValues {
    Constant(f64),
    Profile(Vec<f64>),
}

impl EdgeValues {
    #[inline]
    pub fn at(&self, k: usize) -> f64 {
        match self {
            EdgeValues::Constant(c) => *c,
            EdgeValues::Profile(v) => v[k],
        }
    }

    fn check(&self, name: &str, len: usize) -> Result<()> {
        match self {
            EdgeValues::Constant(c) if !(c.is_finite() && *c >= 0.0) => Err(Error::Consistency(
                format!("{name} boundary value {c} must be non-negative"),
            )),
            EdgeValues::Profile(v) if v.len() != len => Err(Error::Consistency(format!(
                "{name} boundary profile has {} values, edge has {len} nodes",
                v.len()
            ))),
            EdgeValues::Profile(v) => match v.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
                Some(x) => Err(Error::Consistency(format!(
                    "{name} boundary value {x} must be non-negative"
                ))),
                None => Ok(()),
            },
            _ => Ok(()),
        }
    }

    fn scaled(&self, f: f64) -> Self {
        match self {
            EdgeValues::Constant(c) => EdgeValues::Constant(c * f),
            EdgeValues::Profile(v) => EdgeValues::Profile(v.iter().map(|x| x * f).collect()),
        }
    }

    fn reversed(&self) -> Self {
        match self {
            EdgeValues::Constant(c) => EdgeValues::Constant(*c),
            EdgeValues::Profile(v) => EdgeValues::Profile(v.iter().rev().copied().collect()),
        }
    }
}

/// Dirichlet data on the four edges: left is ξ1 = 0, right ξ1 = δ, bottom
/// ξ2 = 0, top ξ2 = δ.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundarySpec {
    pub left: EdgeValues,
    pub right: EdgeValues,
    pub bottom: EdgeValues,
    pub top: EdgeValues,
}

impl BoundarySpec {
    pub fn uniform(c: f64) -> Self {
        Self {
            left: EdgeValues::Constant(c),
            right: EdgeValues::Constant(c),
            bottom: EdgeValues::Constant(c),
            top: EdgeValues::Constant(c),
        }
    }

    /// Edge data read off the boundary nodes of a field.
    pub fn from_field(f: &ScalarField) -> Self {
        let g = f.grid();
        let (nx, ny) = (g.nx, g.ny);
        Self {
            left: EdgeValues::Profile((0..ny).map(|j| f.get(0, j)).collect()),
            right: EdgeValues::Profile((0..ny).map(|j| f.get(nx - 1, j)).collect()),
            bottom: EdgeValues::Profile((0..nx).map(|i| f.get(i, 0)).collect()),
            top: EdgeValues::Profile((0..nx).map(|i| f.get(i, ny - 1)).collect()),
        }
    }

    pub fn linear_ramp(grid: &Grid2D, axis: Axis, start: f64, end: f64) -> Self {
        Self::from_field(&linear_ramp(grid, axis, start, end))
    }

    pub fn validate(&self, grid: &Grid2D) -> Result<()> {
        let (nx, ny) = (grid.nx, grid.ny);
        self.left.check("left", ny)?;
        self.right.check("right", ny)?;
        self.bottom.check("bottom", nx)?;
        self.top.check("top", nx)?;
        let corners = [
            ("bottom-left", self.left.at(0), self.bottom.at(0)),
            ("bottom-right", self.right.at(0), self.bottom.at(nx - 1)),
            ("top-left", self.left.at(ny - 1), self.top.at(0)),
            ("top-right", self.right.at(ny - 1), self.top.at(nx - 1)),
        ];
        for (name, a, b) in corners {
            if (a - b).abs() > CORNER_TOL {
                return Err(Error::Consistency(format!(
                    "{name} corner mismatch: {a} vs {b}"
                )));
            }
        }
        Ok(())
    }

    /// Dirichlet value at a boundary node; `None` for interior nodes.
    /// Bottom/top data take precedence at corners.
    #[inline]
    pub fn value_at(&self, grid: &Grid2D, i: usize, j: usize) -> Option<f64> {
        if j == 0 {
            Some(self.bottom.at(i))
        } else if j + 1 == grid.ny {
            Some(self.top.at(i))
        } else if i == 0 {
            Some(self.left.at(j))
        } else if i + 1 == grid.nx {
            Some(self.right.at(j))
        } else {
            None
        }
    }

    /// Overwrite the boundary nodes of `f`.
    pub fn apply(&self, f: &mut ScalarField) {
        let g = *f.grid();
        let (nx, ny) = (g.nx, g.ny);
        for j in 1..ny - 1 {
            f.set(0, j, self.left.at(j));
            f.set(nx - 1, j, self.right.at(j));
        }
        for i in 0..nx {
            f.set(i, 0, self.bottom.at(i));
            f.set(i, ny - 1, self.top.at(i));
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            left: self.left.scaled(factor),
            right: self.right.scaled(factor),
            bottom: self.bottom.scaled(factor),
            top: self.top.scaled(factor),
        }
    }

    /// Data for the point-reflected domain `(ξ1, ξ2) → (δ - ξ1, δ - ξ2)`.
    pub fn reflect_both(&self) -> Self {
        Self {
            left: self.right.reversed(),
            right: self.left.reversed(),
            bottom: self.top.reversed(),
            top: self.bottom.reversed(),
        }
    }

    pub fn max_value(&self) -> f64 {
        let edge_max = |e: &EdgeValues| match e {
            EdgeValues::Constant(c) => *c,
            EdgeValues::Profile(v) => v.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        };
        [&self.left, &self.right, &self.bottom, &self.top]
            .into_iter()
            .map(edge_max)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Linear ramp across the domain, `start` on the edge through the origin and
/// `end` on the opposite edge.
pub fn linear_ramp(grid: &Grid2D, axis: Axis, start: f64, end: f64) -> ScalarField {
    let (sx, sy) = ((grid.nx - 1) as f64, (grid.ny - 1) as f64);
    ScalarField::from_index_fn(*grid, |i, j| {
        let s = match axis {
            Axis::Xi1 => i as f64 / sx,
            Axis::Xi2 => j as f64 / sy,
            Axis::Both => 0.5 * (i as f64 / sx + j as f64 / sy),
        };
        start + (end - start) * s
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialSpec {
    /// Flat interior at the given level; boundary nodes carry the Dirichlet
    /// data.
    Constant(f64),
    LinearRamp { axis: Axis, start: f64, end: f64 },
    /// CSV grid snapshot.
    FromFile(PathBuf),
    Field(ScalarField),
}

impl InitialSpec {
    /// Build the initial field on `grid` and verify it carries the Dirichlet
    /// data on every boundary node.
    pub fn generate(&self, grid: &Grid2D, boundary: &BoundarySpec) -> Result<ScalarField> {
        let f = match self {
            InitialSpec::Constant(c) => {
                let mut f = ScalarField::constant(*grid, *c);
                boundary.apply(&mut f);
                f
            }
            InitialSpec::LinearRamp { axis, start, end } => linear_ramp(grid, *axis, *start, *end),
            InitialSpec::FromFile(path) => snapshot::read_snapshot(path)?.into_field(*grid)?,
            InitialSpec::Field(f) => {
                if f.grid().nx != grid.nx || f.grid().ny != grid.ny {
                    return Err(Error::GridMismatch);
                }
                f.clone().regrid(*grid)?
            }
        };
        if let Some(v) = f.values().iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::Consistency(format!(
                "initial concentration {v} must be non-negative"
            )));
        }
        check_boundary_agreement(&f, boundary)?;
        Ok(f)
    }

    /// Same data with every concentration multiplied by `factor`. File
    /// sources are loaded and materialized on `grid`.
    fn scaled(&self, factor: f64, grid: &Grid2D) -> Result<Self> {
        Ok(match self {
            InitialSpec::Constant(c) => InitialSpec::Constant(c * factor),
            InitialSpec::LinearRamp { axis, start, end } => InitialSpec::LinearRamp {
                axis: *axis,
                start: start * factor,
                end: end * factor,
            },
            InitialSpec::FromFile(path) => InitialSpec::Field(
                snapshot::read_snapshot(path)?
                    .into_field(*grid)?
                    .map(|v| v * factor),
            ),
            InitialSpec::Field(f) => InitialSpec::Field(f.map(|v| v * factor)),
        })
    }
}

fn check_boundary_agreement(f: &ScalarField, boundary: &BoundarySpec) -> Result<()> {
    let g = *f.grid();
    for j in 0..g.ny {
        for i in 0..g.nx {
            if let Some(b) = boundary.value_at(&g, i, j) {
                let v = f.get(i, j);
                if (v - b).abs() > CORNER_TOL * (1.0 + b.abs()) {
                    return Err(Error::Consistency(format!(
                        "initial value {v} at boundary node ({i}, {j}) differs from boundary value {b}"
                    )));
                }
            }
        }
    }
    Ok(())
}

/// The dimensionless problem on the square `(0, δ)²`.
#[derive(Debug, Clone, PartialEq)]
pub struct DimensionlessConfig {
    pub phi: f64,
    pub v1: f64,
    pub v2: f64,
    pub delta: f64,
    pub grid: Grid2D,
    pub boundary: BoundarySpec,
    pub initial: InitialSpec,
}

impl DimensionlessConfig {
    pub fn new(
        phi: f64,
        (v1, v2): (f64, f64),
        delta: f64,
        (nx, ny): (usize, usize),
        boundary: BoundarySpec,
        initial: InitialSpec,
    ) -> Result<Self> {
        if !(delta.is_finite() && delta > 0.0) {
            return Err(Error::param("delta", format!("must be positive, got {delta}")));
        }
        let cfg = Self {
            phi,
            v1,
            v2,
            delta,
            grid: Grid2D::new(nx, ny, delta, delta)?,
            boundary,
            initial,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.phi.is_finite() && self.phi >= 0.0) {
            return Err(Error::param("phi", format!("must be non-negative, got {}", self.phi)));
        }
        if !self.v1.is_finite() {
            return Err(Error::param("v1", "must be finite"));
        }
        if !self.v2.is_finite() {
            return Err(Error::param("v2", "must be finite"));
        }
        if self.grid.length1 != self.delta || self.grid.length2 != self.delta {
            return Err(Error::Consistency(format!(
                "grid extents {}x{} differ from delta {}",
                self.grid.length1, self.grid.length2, self.delta
            )));
        }
        self.boundary.validate(&self.grid)?;
        self.initial_field().map(|_| ())
    }

    pub fn initial_field(&self) -> Result<ScalarField> {
        self.initial.generate(&self.grid, &self.boundary)
    }

    pub fn with_velocity(&self, v1: f64, v2: f64) -> Self {
        Self {
            v1,
            v2,
            ..self.clone()
        }
    }

    /// The problem mirrored through the domain center: both velocity
    /// components flip, boundary and initial data are point-reflected.
    pub fn reflect_both(&self) -> Result<Self> {
        Ok(Self {
            v1: -self.v1,
            v2: -self.v2,
            boundary: self.boundary.reflect_both(),
            initial: InitialSpec::Field(self.initial_field()?.reflect_both()),
            ..self.clone()
        })
    }
}

/// Map a dimensional problem onto the dimensionless one.
///
/// `grid` supplies the node counts; extents become `δ = Λ / x*`. Boundary
/// and initial concentrations are in cm⁻³ and get divided by `n_inf`.
pub fn to_dimensionless(
    p: &PhysicalParams,
    (v_x, v_y): (f64, f64),
    lambda: f64,
    grid: &Grid2D,
    boundary: &BoundarySpec,
    initial: &InitialSpec,
) -> Result<DimensionlessConfig> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::param("lambda", format!("must be positive, got {lambda}")));
    }
    let s = compute_scales(p)?;
    let delta = lambda / s.x_star;
    let dgrid = grid.with_lengths(delta, delta)?;
    let inv = 1.0 / s.n_inf;
    let cfg = DimensionlessConfig {
        phi: s.phi,
        v1: v_x / s.v_scale,
        v2: v_y / s.v_scale,
        delta,
        grid: dgrid,
        boundary: boundary.scaled(inv),
        initial: initial.scaled(inv, &dgrid)?,
    };
    cfg.validate()?;
    Ok(cfg)
}

/// `N_e = u · n_inf` on a grid stretched by `x*`.
pub fn to_dimensional(u: &ScalarField, s: &Scales) -> ScalarField {
    let g = u.grid();
    let grid = Grid2D {
        length1: g.length1 * s.x_star,
        length2: g.length2 * s.x_star,
        ..*g
    };
    ScalarField::new(grid, u.values().iter().map(|v| v * s.n_inf).collect())
        .expect("same node count")
}

/// Inverse of [`to_dimensional`].
pub fn field_to_dimensionless(n: &ScalarField, s: &Scales) -> ScalarField {
    let g = n.grid();
    let grid = Grid2D {
        length1: g.length1 / s.x_star,
        length2: g.length2 / s.x_star,
        ..*g
    };
    ScalarField::new(grid, n.values().iter().map(|v| v / s.n_inf).collect())
        .expect("same node count")
}
