//! Discrete exterior calculus on the periodic torus grid.
//!
//! Forms live on the nodes (collocated). `d` uses centered differences `D`
//! and needs no metric; the codifferentials are the exact adjoints of `d`
//! in the metric inner products of `g = e^{2u}(dx² + dy²)`:
//!
//! ```text
//! δ₁(p dx + q dy)  = −e^{−2u} (D_x p + D_y q)
//! δ₂(w dx∧dy)      = D_y(e^{−2u} w) dx − D_x(e^{−2u} w) dy
//! Δ_d              = −(dδ + δd)
//! ```
//!
//! On the flat torus `Δ_d` is the componentwise (wide-stencil) Laplacian with
//! non-positive spectrum. Centered `D` is antisymmetric under periodic
//! summation, which makes the adjointness exact.

mod comass;
mod heat;
mod warped;

pub use comass::{
    comass_dual_bound, comass_lower_bound, comass_norm, norm_axiom_check, ComassLogRow, ComassOptions, ComassResult, NormAxiomReport,
};
pub use heat::{
    form_admissible_dt, potential_track, step_form_heat, CoupledTorus, PotentialTrack,
};
pub use warped::{
    radial_comass, radial_laplacian, radial_period, radial_sup_norm, CoupledWarped,
};

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::geom::ConformalTorusMetric;
use crate::grid::PeriodicGrid2;

/// Covariant 1-form `p dx + q dy` sampled on the torus grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OneForm {
    pub grid: PeriodicGrid2,
    pub p: Vec<f64>,
    pub q: Vec<f64>,
}

impl OneForm {
    pub fn new(grid: PeriodicGrid2, p: Vec<f64>, q: Vec<f64>) -> Result<Self> {
        if p.len() != grid.len() || q.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "form components have {} and {} samples for {} nodes",
                p.len(),
                q.len(),
                grid.len()
            )));
        }
        ensure_finite("p", &p)?;
        ensure_finite("q", &q)?;
        Ok(Self { grid, p, q })
    }

    pub fn from_fn(grid: PeriodicGrid2, p: impl Fn(f64, f64) -> f64, q: impl Fn(f64, f64) -> f64) -> Result<Self> {
        Self::new(grid, grid.sample(p), grid.sample(q))
    }

    pub fn constant(grid: PeriodicGrid2, a: f64, b: f64) -> Self {
        Self {
            grid,
            p: vec![a; grid.len()],
            q: vec![b; grid.len()],
        }
    }

    pub fn zero(grid: PeriodicGrid2) -> Self {
        Self::constant(grid, 0.0, 0.0)
    }

    pub fn add(&self, other: &Self) -> Self {
        self.axpy(1.0, other)
    }

    /// `self + a·other`.
    pub fn axpy(&self, a: f64, other: &Self) -> Self {
        Self {
            grid: self.grid,
            p: self.p.iter().zip(&other.p).map(|(x, y)| x + a * y).collect(),
            q: self.q.iter().zip(&other.q).map(|(x, y)| x + a * y).collect(),
        }
    }

    pub fn scale(&self, c: f64) -> Self {
        Self {
            grid: self.grid,
            p: self.p.iter().map(|v| c * v).collect(),
            q: self.q.iter().map(|v| c * v).collect(),
        }
    }

    /// Coefficient of `dφ` against `dx∧dy`.
    pub fn curl(&self) -> Vec<f64> {
        d1(self)
    }

    pub fn max_abs(&self) -> f64 {
        self.p.iter().chain(&self.q).fold(0.0, |a, v| a.max(v.abs()))
    }
}

/// `dF = D_x F dx + D_y F dy`.
pub fn d0(grid: &PeriodicGrid2, f: &[f64]) -> OneForm {
    OneForm {
        grid: *grid,
        p: grid.d_x(f),
        q: grid.d_y(f),
    }
}

/// `d(p dx + q dy) = (D_x q − D_y p) dx∧dy`.
pub fn d1(phi: &OneForm) -> Vec<f64> {
    let g = &phi.grid;
    let dq = g.d_x(&phi.q);
    let dp = g.d_y(&phi.p);
    dq.iter().zip(dp).map(|(a, b)| a - b).collect()
}

/// Metric-dependent operators of one torus snapshot.
#[derive(Debug, Clone)]
pub struct DecOperators {
    grid: PeriodicGrid2,
    u: Vec<f64>,
    /// `e^{−2u}`
    w: Vec<f64>,
}

impl DecOperators {
    pub fn new(m: &ConformalTorusMetric) -> Self {
        Self {
            grid: *m.grid(),
            u: m.u().to_vec(),
            w: m.inverse_factor(),
        }
    }

    pub fn grid(&self) -> &PeriodicGrid2 {
        &self.grid
    }

    pub fn d0(&self, f: &[f64]) -> OneForm {
        d0(&self.grid, f)
    }

    pub fn d1(&self, phi: &OneForm) -> Vec<f64> {
        d1(phi)
    }

    /// Codifferential on 1-forms.
    pub fn codifferential(&self, phi: &OneForm) -> Vec<f64> {
        let dp = self.grid.d_x(&phi.p);
        let dq = self.grid.d_y(&phi.q);
        dp.iter()
            .zip(&dq)
            .zip(&self.w)
            .map(|((a, b), w)| -w * (a + b))
            .collect()
    }

    /// Codifferential on 2-forms `w dx∧dy`.
    pub fn codifferential2(&self, omega: &[f64]) -> OneForm {
        let s: Vec<f64> = omega.iter().zip(&self.w).map(|(o, w)| o * w).collect();
        OneForm {
            grid: self.grid,
            p: self.grid.d_y(&s),
            q: self.grid.d_x(&s).into_iter().map(|v| -v).collect(),
        }
    }

    /// `Δ_d = −(dδ + δd)`.
    pub fn hodge_laplacian(&self, phi: &OneForm) -> OneForm {
        let a = self.d0(&self.codifferential(phi));
        let b = self.codifferential2(&self.d1(phi));
        OneForm {
            grid: self.grid,
            p: a.p.iter().zip(&b.p).map(|(x, y)| -(x + y)).collect(),
            q: a.q.iter().zip(&b.q).map(|(x, y)| -(x + y)).collect(),
        }
    }

    /// Scalar Laplace–Beltrami `−δdF`.
    pub fn scalar_laplacian(&self, f: &[f64]) -> Vec<f64> {
        self.codifferential(&self.d0(f)).into_iter().map(|v| -v).collect()
    }

    /// Rough Laplacian `g^{jk} ∇_j ∇_k φ_i`, built from the Christoffel
    /// symbols `Γ^k_{ij} = δ_ik u_j + δ_jk u_i − δ_ij u_k` of the conformal
    /// metric rather than from `d` and `δ`.
    pub fn rough_laplacian(&self, phi: &OneForm) -> OneForm {
        let g = &self.grid;
        let n = g.len();
        let ux = g.d_x(&self.u);
        let uy = g.d_y(&self.u);
        let du = [&ux, &uy];
        let comp = [&phi.p, &phi.q];
        let gamma = |k: usize, i: usize, j: usize, node: usize| -> f64 {
            let mut v = 0.0;
            if i == k {
                v += du[j][node];
            }
            if j == k {
                v += du[i][node];
            }
            if i == j {
                v -= du[k][node];
            }
            v
        };
        // T[j][i] = ∇_j φ_i
        let mut t: [[Vec<f64>; 2]; 2] = Default::default();
        for j in 0..2 {
            for i in 0..2 {
                let partial = if j == 0 { g.d_x(comp[i]) } else { g.d_y(comp[i]) };
                t[j][i] = (0..n)
                    .map(|a| partial[a] - (0..2).map(|l| gamma(l, j, i, a) * comp[l][a]).sum::<f64>())
                    .collect();
            }
        }
        let mut out = [vec![0.0; n], vec![0.0; n]];
        for i in 0..2 {
            for j in 0..2 {
                // (∇_j T)_{j i} summed over j with g^{jj} = e^{−2u}
                let partial = if j == 0 { g.d_x(&t[j][i]) } else { g.d_y(&t[j][i]) };
                for a in 0..n {
                    let mut v = partial[a];
                    for l in 0..2 {
                        v -= gamma(l, j, j, a) * t[l][i][a] + gamma(l, j, i, a) * t[j][l][a];
                    }
                    out[i][a] += self.w[a] * v;
                }
            }
        }
        let [p, q] = out;
        OneForm { grid: *g, p, q }
    }

    /// Metric inner product of 1-forms `Σ g^{ij} α_i β_j dA`.
    pub fn inner1(&self, a: &OneForm, b: &OneForm) -> f64 {
        // g^{ij} dA = e^{−2u} e^{2u} δ^{ij} h²
        (0..self.grid.len())
            .map(|k| a.p[k] * b.p[k] + a.q[k] * b.q[k])
            .sum::<f64>()
            * self.grid.cell_area()
    }

    /// Metric inner product of functions `Σ f g dA`.
    pub fn inner0(&self, f: &[f64], g: &[f64]) -> f64 {
        f.iter()
            .zip(g)
            .zip(&self.u)
            .map(|((a, b), u)| a * b * (2.0 * u).exp())
            .sum::<f64>()
            * self.grid.cell_area()
    }

    /// Metric inner product of 2-forms.
    pub fn inner2(&self, a: &[f64], b: &[f64]) -> f64 {
        a.iter()
            .zip(b)
            .zip(&self.w)
            .map(|((a, b), w)| a * b * w)
            .sum::<f64>()
            * self.grid.cell_area()
    }
}

/// Pointwise `|φ|_g = e^{−u} √(p² + q²)`.
pub fn pointwise_norm(phi: &OneForm, m: &ConformalTorusMetric) -> Vec<f64> {
    m.u()
        .iter()
        .enumerate()
        .map(|(k, u)| (-u).exp() * phi.p[k].hypot(phi.q[k]))
        .collect()
}

/// `sup_x |φ(x)|_g` over the grid nodes.
pub fn sup_norm(phi: &OneForm, m: &ConformalTorusMetric) -> f64 {
    pointwise_norm(phi, m).into_iter().fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeriodReport {
    pub value: f64,
    /// Largest deviation over all parallel axis-aligned representatives.
    pub spread: f64,
    pub max_curl: f64,
}

/// Row integrals `Σ_i p(i, j) hx` for every row `j`, and column integrals.
fn axis_integrals(phi: &OneForm) -> (Vec<f64>, Vec<f64>) {
    let g = &phi.grid;
    let rows = (0..g.ny)
        .map(|j| phi.p[j * g.nx..(j + 1) * g.nx].iter().sum::<f64>() * g.hx())
        .collect();
    let cols = (0..g.nx)
        .map(|i| (0..g.ny).map(|j| phi.q[j * g.nx + i]).sum::<f64>() * g.hy())
        .collect();
    (rows, cols)
}

/// Integral of `φ` over the loop with winding `(a, b)` running along row 0
/// then column 0.
pub fn period(phi: &OneForm, winding: [i64; 2]) -> PeriodReport {
    let (rows, cols) = axis_integrals(phi);
    let [a, b] = winding.map(|w| w as f64);
    let value = a * rows[0] + b * cols[0];
    let dev = |v: &[f64]| v.iter().fold(0.0_f64, |m, x| m.max((x - v[0]).abs()));
    let spread = a.abs() * dev(&rows) + b.abs() * dev(&cols);
    let max_curl = phi.curl().iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if spread > 1e-6 * (1.0 + value.abs()) {
        log::warn!("period depends on the representative: spread {spread:.3e}, max curl {max_curl:.3e}");
    }
    PeriodReport {
        value,
        spread,
        max_curl,
    }
}

/// A de Rham class on the torus: a closed representative and its periods
/// along the two generators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohomologyClass {
    pub base: OneForm,
    pub periods: [f64; 2],
}

impl CohomologyClass {
    /// Tolerance on `sup |dφ|` relative to `sup |φ| / h`.
    pub const CLOSED_TOL: f64 = 1e-10;

    pub fn new(base: OneForm) -> Result<Self> {
        let curl = base.curl().iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let scale = base.max_abs() / base.grid.h_min();
        if curl > Self::CLOSED_TOL * scale.max(1.0) {
            return Err(Error::InvalidClass(format!(
                "representative is not closed: sup |dφ| = {curl:.3e}"
            )));
        }
        let periods = [period(&base, [1, 0]).value, period(&base, [0, 1]).value];
        Ok(Self { base, periods })
    }

    /// Constant (flat-harmonic) representative with the given periods.
    pub fn from_periods(grid: PeriodicGrid2, periods: [f64; 2]) -> Self {
        Self {
            base: OneForm::constant(grid, periods[0] / grid.lx, periods[1] / grid.ly),
            periods,
        }
    }

    /// Same class, representative shifted by `dF`.
    pub fn with_exact(&self, f: &[f64]) -> Self {
        Self {
            base: self.base.add(&d0(&self.base.grid, f)),
            periods: self.periods,
        }
    }

    pub fn scale(&self, c: f64) -> Self {
        Self {
            base: self.base.scale(c),
            periods: self.periods.map(|p| c * p),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            base: self.base.add(&other.base),
            periods: [self.periods[0] + other.periods[0], self.periods[1] + other.periods[1]],
        }
    }

    pub fn is_zero(&self) -> bool {
        self.periods.iter().all(|p| p.abs() < 1e-12)
    }

    /// `⟨Φ, α⟩` for an integral winding `α`.
    pub fn pairing(&self, winding: [i64; 2]) -> f64 {
        self.periods[0] * winding[0] as f64 + self.periods[1] * winding[1] as f64
    }
}

/// Gauge function, normalized to zero coordinate mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Potential {
    pub f: Vec<f64>,
}

impl Potential {
    pub fn new(mut f: Vec<f64>) -> Self {
        let mean = f.iter().sum::<f64>() / f.len().max(1) as f64;
        f.iter_mut().for_each(|v| *v -= mean);
        Self { f }
    }

    pub fn zero(n: usize) -> Self {
        Self { f: vec![0.0; n] }
    }

    pub fn max_abs(&self) -> f64 {
        self.f.iter().fold(0.0, |a, v| a.max(v.abs()))
    }
}

/// Weitzenböck residual `sup |Δ_d φ − (Δφ − Kφ)|` on a snapshot.
pub fn weitzenbock_check(m: &ConformalTorusMetric, phi: &OneForm) -> f64 {
    let ops = DecOperators::new(m);
    let hodge = ops.hodge_laplacian(phi);
    let rough = ops.rough_laplacian(phi);
    let k = crate::geom::torus_curvature(m).gauss;
    (0..phi.grid.len())
        .map(|a| {
            let rp = hodge.p[a] - (rough.p[a] - k[a] * phi.p[a]);
            let rq = hodge.q[a] - (rough.q[a] - k[a] * phi.q[a]);
            // measure the residual in the pointwise metric norm
            (-m.u()[a]).exp() * rp.hypot(rq)
        })
        .fold(0.0, f64::max)
}
