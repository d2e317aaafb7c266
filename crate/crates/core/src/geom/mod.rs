//! Metric representations for the two model families and their curvature.
//!
//! * [`ConformalTorusMetric`]: `g = e^{2u}(dx² + dy²)` on a periodic grid.
//! * [`WarpedMetric`]: `g = φ(x)² dx² + ψ(x)² g_can` on `S¹ × S^{n-1}`, where
//!   `g_can` is the **unit** round metric, so all radius information is in `ψ`.
//!
//! Curvature conventions for the warped family are stated in unit-frame terms.
//! With `∂_s = φ⁻¹∂_x` the arclength derivative,
//!
//! ```text
//! ric_s   = Rc(e_s, e_s)     = -(n-1) ψ_ss / ψ
//! ric_sph = Rc(e_θ, e_θ)     = -ψ_ss / ψ + (n-2)(1 - ψ_s²) / ψ²
//! R       = ric_s + (n-1) ric_sph
//! ```
//!
//! and the Ricci flow `∂_t g = -2 Rc` reads `∂_t φ = -ric_s · φ`,
//! `∂_t ψ = -ric_sph · ψ`. The curvature operator is diagonal on
//! `e_i ∧ e_j` with the two sectional curvatures `k_radial = -ψ_ss/ψ` and
//! `k_sphere = (1 - ψ_s²)/ψ²`; `sup_rm` is the largest absolute sectional
//! curvature (operator norm), which on a surface is `sup |K|`.

pub mod oracle;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, ensure_positive, Error, Result};
use crate::grid::{PeriodicGrid1, PeriodicGrid2};

pub use oracle::{generic_curvature_oracle, CurvatureOracle, RiemannTensor};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTorus")]
pub struct ConformalTorusMetric {
    grid: PeriodicGrid2,
    u: Vec<f64>,
}

#[derive(Deserialize)]
struct RawTorus {
    grid: PeriodicGrid2,
    u: Vec<f64>,
}

impl TryFrom<RawTorus> for ConformalTorusMetric {
    type Error = Error;
    fn try_from(raw: RawTorus) -> Result<Self> {
        Self::new(raw.grid, raw.u)
    }
}

impl ConformalTorusMetric {
    pub fn new(grid: PeriodicGrid2, u: Vec<f64>) -> Result<Self> {
        grid.validate()?;
        if u.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "u has {} samples, grid has {} nodes",
                u.len(),
                grid.len()
            )));
        }
        ensure_finite("u", &u)?;
        Ok(Self { grid, u })
    }

    pub fn flat(grid: PeriodicGrid2) -> Self {
        Self {
            u: vec![0.0; grid.len()],
            grid,
        }
    }

    pub fn from_fn(grid: PeriodicGrid2, u: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let values = grid.sample(u);
        Self::new(grid, values)
    }

    pub(crate) fn from_parts_unchecked(grid: PeriodicGrid2, u: Vec<f64>) -> Self {
        Self { grid, u }
    }

    pub fn grid(&self) -> &PeriodicGrid2 {
        &self.grid
    }

    /// Log-conformal factor at each node.
    pub fn u(&self) -> &[f64] {
        &self.u
    }

    pub fn into_u(self) -> Vec<f64> {
        self.u
    }

    /// `e^{-2u}`, the inverse metric coefficient.
    pub fn inverse_factor(&self) -> Vec<f64> {
        self.u.iter().map(|u| (-2.0 * u).exp()).collect()
    }

    pub fn area(&self) -> f64 {
        self.u.iter().map(|u| (2.0 * u).exp()).sum::<f64>() * self.grid.cell_area()
    }

    /// The metric `λ g`.
    pub fn scaled(&self, lambda: f64) -> Self {
        let shift = 0.5 * lambda.ln();
        Self {
            grid: self.grid,
            u: self.u.iter().map(|u| u + shift).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawWarped")]
pub struct WarpedMetric {
    n: usize,
    grid: PeriodicGrid1,
    phi: Vec<f64>,
    psi: Vec<f64>,
}

#[derive(Deserialize)]
struct RawWarped {
    n: usize,
    grid: PeriodicGrid1,
    phi: Vec<f64>,
    psi: Vec<f64>,
}

impl TryFrom<RawWarped> for WarpedMetric {
    type Error = Error;
    fn try_from(raw: RawWarped) -> Result<Self> {
        Self::new(raw.n, raw.grid, raw.phi, raw.psi)
    }
}

impl WarpedMetric {
    pub fn new(n: usize, grid: PeriodicGrid1, phi: Vec<f64>, psi: Vec<f64>) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidGrid(format!(
                "warped products need ambient dimension n >= 3, got {n}"
            )));
        }
        if phi.len() != grid.n || psi.len() != grid.n {
            return Err(Error::InvalidGrid(format!(
                "phi/psi lengths ({}, {}) do not match {} nodes",
                phi.len(),
                psi.len(),
                grid.n
            )));
        }
        ensure_positive("phi", &phi)?;
        ensure_positive("psi", &psi)?;
        Ok(Self { n, grid, phi, psi })
    }

    pub fn from_fn(
        n: usize,
        grid: PeriodicGrid1,
        phi: impl Fn(f64) -> f64,
        psi: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        let (p, s) = (grid.sample(phi), grid.sample(psi));
        Self::new(n, grid, p, s)
    }

    pub(crate) fn from_parts_unchecked(
        n: usize,
        grid: PeriodicGrid1,
        phi: Vec<f64>,
        psi: Vec<f64>,
    ) -> Self {
        Self { n, grid, phi, psi }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn grid(&self) -> &PeriodicGrid1 {
        &self.grid
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    pub fn psi(&self) -> &[f64] {
        &self.psi
    }

    pub fn psi_min(&self) -> f64 {
        self.psi.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Length of an `S¹` fibre, `∮ φ dx`.
    pub fn circle_length(&self) -> f64 {
        self.grid.integrate(&self.phi)
    }

    pub fn scaled(&self, lambda: f64) -> Self {
        let r = lambda.sqrt();
        Self {
            n: self.n,
            grid: self.grid,
            phi: self.phi.iter().map(|v| v * r).collect(),
            psi: self.psi.iter().map(|v| v * r).collect(),
        }
    }

    /// First node whose radius is below `floor`, if any.
    pub fn below_floor(&self, floor: f64) -> Option<(usize, f64)> {
        self.psi
            .iter()
            .enumerate()
            .find(|(_, &p)| p < floor)
            .map(|(i, &p)| (i, p))
    }
}

/// Either model family, as stored in traces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum Metric {
    Torus(ConformalTorusMetric),
    Warped(WarpedMetric),
}

impl Metric {
    pub fn curvature(&self) -> CurvatureFields {
        match self {
            Self::Torus(m) => CurvatureFields::Torus(torus_curvature(m)),
            Self::Warped(m) => CurvatureFields::Warped(warped_curvature(m)),
        }
    }

    pub fn scaled(&self, lambda: f64) -> Self {
        match self {
            Self::Torus(m) => Self::Torus(m.scaled(lambda)),
            Self::Warped(m) => Self::Warped(m.scaled(lambda)),
        }
    }

    pub fn family(&self) -> &'static str {
        match self {
            Self::Torus(_) => "torus",
            Self::Warped(_) => "warped",
        }
    }

    /// Ambient dimension.
    pub fn dim(&self) -> usize {
        match self {
            Self::Torus(_) => 2,
            Self::Warped(m) => m.n,
        }
    }

    /// Total area for tori, `S¹` fibre length for warped products.
    pub fn size(&self) -> f64 {
        match self {
            Self::Torus(m) => m.area(),
            Self::Warped(m) => m.circle_length(),
        }
    }

    pub fn as_torus(&self) -> Option<&ConformalTorusMetric> {
        match self {
            Self::Torus(m) => Some(m),
            Self::Warped(_) => None,
        }
    }

    pub fn as_warped(&self) -> Option<&WarpedMetric> {
        match self {
            Self::Warped(m) => Some(m),
            Self::Torus(_) => None,
        }
    }
}

impl From<ConformalTorusMetric> for Metric {
    fn from(m: ConformalTorusMetric) -> Self {
        Self::Torus(m)
    }
}

impl From<WarpedMetric> for Metric {
    fn from(m: WarpedMetric) -> Self {
        Self::Warped(m)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TorusCurvature {
    pub gauss: Vec<f64>,
    pub scalar: Vec<f64>,
    pub sup_rm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WarpedCurvature {
    pub psi_s: Vec<f64>,
    pub psi_ss: Vec<f64>,
    pub ric_s: Vec<f64>,
    pub ric_sph: Vec<f64>,
    pub scalar: Vec<f64>,
    pub k_radial: Vec<f64>,
    pub k_sphere: Vec<f64>,
    pub sup_rm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CurvatureFields {
    Torus(TorusCurvature),
    Warped(WarpedCurvature),
}

impl CurvatureFields {
    pub fn scalar(&self) -> &[f64] {
        match self {
            Self::Torus(c) => &c.scalar,
            Self::Warped(c) => &c.scalar,
        }
    }

    pub fn sup_rm(&self) -> f64 {
        match self {
            Self::Torus(c) => c.sup_rm,
            Self::Warped(c) => c.sup_rm,
        }
    }

    pub fn scalar_min(&self) -> f64 {
        self.scalar().iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn scalar_max(&self) -> f64 {
        self.scalar().iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// `K = -e^{-2u} (u_xx + u_yy)` with the compact five-point stencil.
pub fn torus_curvature(m: &ConformalTorusMetric) -> TorusCurvature {
    let lap = m.grid.laplacian(&m.u);
    let gauss: Vec<f64> = lap
        .iter()
        .zip(&m.u)
        .map(|(l, u)| -(-2.0 * u).exp() * l)
        .collect();
    let scalar = gauss.iter().map(|k| 2.0 * k).collect();
    let sup_rm = gauss.iter().fold(0.0_f64, |a, k| a.max(k.abs()));
    TorusCurvature {
        gauss,
        scalar,
        sup_rm,
    }
}

/// Total curvature `∫ K dA`; zero on a torus.
pub fn total_curvature(m: &ConformalTorusMetric, k: &TorusCurvature) -> f64 {
    k.gauss
        .iter()
        .zip(&m.u)
        .map(|(k, u)| k * (2.0 * u).exp())
        .sum::<f64>()
        * m.grid.cell_area()
}

/// Arclength derivatives `(ψ_s, ψ_ss)` with `ds = φ dx`, second order.
pub(crate) fn arclength_derivatives(grid: &PeriodicGrid1, phi: &[f64], psi: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = grid.n;
    let h = grid.h();
    let mut ds = vec![0.0; n];
    let mut dss = vec![0.0; n];
    for i in 0..n {
        let ip = if i + 1 == n { 0 } else { i + 1 };
        let im = if i == 0 { n - 1 } else { i - 1 };
        ds[i] = (psi[ip] - psi[im]) / (2.0 * h * phi[i]);
        let phi_p = 0.5 * (phi[i] + phi[ip]);
        let phi_m = 0.5 * (phi[i] + phi[im]);
        dss[i] = ((psi[ip] - psi[i]) / phi_p - (psi[i] - psi[im]) / phi_m) / (h * h * phi[i]);
    }
    (ds, dss)
}

pub fn warped_curvature(m: &WarpedMetric) -> WarpedCurvature {
    let (psi_s, psi_ss) = arclength_derivatives(&m.grid, &m.phi, &m.psi);
    let nm1 = (m.n - 1) as f64;
    let nm2 = (m.n - 2) as f64;
    let len = m.grid.n;
    let mut out = WarpedCurvature {
        psi_s,
        psi_ss,
        ric_s: Vec::with_capacity(len),
        ric_sph: Vec::with_capacity(len),
        scalar: Vec::with_capacity(len),
        k_radial: Vec::with_capacity(len),
        k_sphere: Vec::with_capacity(len),
        sup_rm: 0.0,
    };
    for i in 0..len {
        let psi = m.psi[i];
        let k_rad = -out.psi_ss[i] / psi;
        let k_sph = (1.0 - out.psi_s[i] * out.psi_s[i]) / (psi * psi);
        let ric_s = nm1 * k_rad;
        let ric_sph = k_rad + nm2 * k_sph;
        out.ric_s.push(ric_s);
        out.ric_sph.push(ric_sph);
        out.scalar.push(ric_s + nm1 * ric_sph);
        out.k_radial.push(k_rad);
        out.k_sphere.push(k_sph);
        out.sup_rm = out.sup_rm.max(k_rad.abs()).max(k_sph.abs());
    }
    out
}
