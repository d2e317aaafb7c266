//! Two-dimensional diagonal metrics `a dx² + b dy²` that carry the loops.
//!
//! On a conformal torus `a = b = e^{2u}`. On a warped product the loops live
//! in the totally geodesic surface `S¹ × (great circle)` with coordinates
//! `(x, θ)`, where `a = φ(x)²` and `b = ψ(x)²`; curvature along directions
//! normal to that surface is supplied separately.

use crate::geom::{ConformalTorusMetric, Metric, WarpedMetric};
use crate::grid::{PeriodicSpline1, PeriodicSpline2};

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Coeffs {
    pub a: f64,
    pub b: f64,
    pub ax: f64,
    pub ay: f64,
    pub bx: f64,
    pub by: f64,
}

#[derive(Debug, Clone)]
enum Kind {
    Torus(PeriodicSpline2),
    Warped {
        n: usize,
        phi: PeriodicSpline1,
        psi: PeriodicSpline1,
    },
}

/// Spline-interpolated surface on which loops are measured and shortened.
#[derive(Debug, Clone)]
pub struct LoopSurface {
    kind: Kind,
    periods: [f64; 2],
}

impl LoopSurface {
    pub fn torus(m: &ConformalTorusMetric) -> Self {
        let g = m.grid();
        Self {
            kind: Kind::Torus(PeriodicSpline2::new(g, m.u())),
            periods: [g.lx, g.ly],
        }
    }

    pub fn warped(m: &WarpedMetric) -> Self {
        let p = m.grid().period;
        Self {
            kind: Kind::Warped {
                n: m.n(),
                phi: PeriodicSpline1::new(m.phi(), p),
                psi: PeriodicSpline1::new(m.psi(), p),
            },
            periods: [p, std::f64::consts::TAU],
        }
    }

    pub fn new(m: &Metric) -> Self {
        match m {
            Metric::Torus(t) => Self::torus(t),
            Metric::Warped(w) => Self::warped(w),
        }
    }

    pub fn periods(&self) -> [f64; 2] {
        self.periods
    }

    /// Manifold dimension.
    pub fn dim(&self) -> usize {
        match &self.kind {
            Kind::Torus(_) => 2,
            Kind::Warped { n, .. } => *n,
        }
    }

    pub fn is_warped(&self) -> bool {
        matches!(self.kind, Kind::Warped { .. })
    }

    pub fn coeffs(&self, x: f64, y: f64) -> Coeffs {
        match &self.kind {
            Kind::Torus(s) => {
                let u = s.eval(x, y);
                let e = (2.0 * u.v).exp();
                Coeffs {
                    a: e,
                    b: e,
                    ax: 2.0 * u.dx * e,
                    ay: 2.0 * u.dy * e,
                    bx: 2.0 * u.dx * e,
                    by: 2.0 * u.dy * e,
                }
            }
            Kind::Warped { phi, psi, .. } => {
                let [f, fx, _] = phi.eval(x);
                let [p, px, _] = psi.eval(x);
                Coeffs {
                    a: f * f,
                    b: p * p,
                    ax: 2.0 * f * fx,
                    ay: 0.0,
                    bx: 2.0 * p * px,
                    by: 0.0,
                }
            }
        }
    }

    /// `Γ^k_{ij}` as `[k][i][j]`.
    pub fn christoffel(&self, x: f64, y: f64) -> [[[f64; 2]; 2]; 2] {
        let c = self.coeffs(x, y);
        let (ia, ib) = (0.5 / c.a, 0.5 / c.b);
        [
            [[c.ax * ia, c.ay * ia], [c.ay * ia, -c.bx * ia]],
            [[-c.ay * ib, c.bx * ib], [c.bx * ib, c.by * ib]],
        ]
    }

    /// Warping functions and their `x`-derivatives: `[φ, φ', φ'']`, `[ψ, ψ', ψ'']`.
    pub(crate) fn warping(&self, x: f64) -> Option<([f64; 3], [f64; 3])> {
        match &self.kind {
            Kind::Warped { phi, psi, .. } => Some((phi.eval(x), psi.eval(x))),
            Kind::Torus(_) => None,
        }
    }

    /// Sectional curvature of the surface's own tangent plane.
    pub fn gauss(&self, x: f64, y: f64) -> f64 {
        match &self.kind {
            Kind::Torus(s) => {
                let u = s.eval(x, y);
                -(-2.0 * u.v).exp() * (u.dxx + u.dyy)
            }
            Kind::Warped { .. } => self.warped_sectionals(x).0,
        }
    }

    /// `(k_radial, k_sphere)` of the warped product at `x`.
    fn warped_sectionals(&self, x: f64) -> (f64, f64) {
        let ([f, fx, _], [p, px, pxx]) = self.warping(x).expect("warped surface");
        let ps = px / f;
        let pss = (pxx * f - px * fx) / (f * f * f);
        (-pss / p, (1.0 - ps * ps) / (p * p))
    }

    /// Sectional curvature of the plane spanned by the unit tangent with
    /// coordinate components `v` and a unit normal pointing out of the
    /// surface (warped only; zero on the torus, which has none).
    pub fn normal_sectional(&self, x: f64, y: f64, v: [f64; 2]) -> f64 {
        match &self.kind {
            Kind::Torus(_) => 0.0,
            Kind::Warped { .. } => {
                let (kr, ks) = self.warped_sectionals(x);
                let c = self.coeffs(x, y);
                let cos2 = (c.a * v[0] * v[0]).min(1.0);
                cos2 * kr + (1.0 - cos2) * ks
            }
        }
    }

    /// `Rc(V, V)` for the unit vector with coordinate components `v`.
    pub fn ricci(&self, x: f64, y: f64, v: [f64; 2]) -> f64 {
        let k = self.gauss(x, y);
        match &self.kind {
            Kind::Torus(_) => k,
            Kind::Warped { n, .. } => k + (*n as f64 - 2.0) * self.normal_sectional(x, y, v),
        }
    }

    /// `|v|_g` at `(x, y)`.
    pub fn norm(&self, x: f64, y: f64, v: [f64; 2]) -> f64 {
        let c = self.coeffs(x, y);
        (c.a * v[0] * v[0] + c.b * v[1] * v[1]).sqrt()
    }
}
