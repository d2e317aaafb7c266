//! Slow, dimension-generic curvature oracle.
//!
//! Christoffel symbols come from centered differences of the metric
//! components, the Riemann tensor from centered differences of the
//! Christoffels. Nothing here knows about conformal factors or warped
//! products, which is the point: it validates the closed-form reductions.
//!
//! Convention: `R(∂c, ∂d)∂b = R^a_{bcd} ∂a` with
//! `R^a_{bcd} = ∂c Γ^a_{db} − ∂d Γ^a_{cb} + Γ^a_{ce}Γ^e_{db} − Γ^a_{de}Γ^e_{cb}`,
//! sectional curvature `K(X, Y) = R_{abcd} X^a Y^b X^c Y^d / |X ∧ Y|²`
//! (positive on round spheres) and `Ric_{bd} = R^a_{bad}`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::grid::PeriodicSpline2;

use super::ConformalTorusMetric;

/// Largest coordinate dimension the oracle accepts.
pub const MAX_DIM: usize = 4;
/// Largest number of evaluation points per call.
pub const MAX_POINTS: usize = 4096;

/// Metric components as a function of coordinates.
pub type MetricFn<'a> = dyn Fn(&[f64]) -> DMatrix<f64> + Sync + 'a;

#[derive(Debug, Clone, PartialEq)]
pub struct RiemannTensor {
    pub dim: usize,
    pub point: Vec<f64>,
    pub metric: DMatrix<f64>,
    /// Fully covariant `R_{abcd}`, flattened row-major.
    pub lowered: Vec<f64>,
    pub ricci: DMatrix<f64>,
    pub scalar: f64,
}

impl RiemannTensor {
    #[inline]
    pub fn r(&self, a: usize, b: usize, c: usize, d: usize) -> f64 {
        let n = self.dim;
        self.lowered[((a * n + b) * n + c) * n + d]
    }

    pub fn sectional(&self, x: &[f64], y: &[f64]) -> f64 {
        let n = self.dim;
        let mut num = 0.0;
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        num += self.r(a, b, c, d) * x[a] * y[b] * x[c] * y[d];
                    }
                }
            }
        }
        let g = |u: &[f64], v: &[f64]| {
            let mut s = 0.0;
            for i in 0..n {
                for j in 0..n {
                    s += self.metric[(i, j)] * u[i] * v[j];
                }
            }
            s
        };
        num / (g(x, x) * g(y, y) - g(x, y).powi(2))
    }

    /// `Ric(v, v) / g(v, v)`.
    pub fn ricci_along(&self, v: &[f64]) -> f64 {
        let n = self.dim;
        let (mut num, mut den) = (0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                num += self.ricci[(i, j)] * v[i] * v[j];
                den += self.metric[(i, j)] * v[i] * v[j];
            }
        }
        num / den
    }

    /// Largest absolute component of `R_{abcd}`.
    pub fn max_abs(&self) -> f64 {
        self.lowered.iter().fold(0.0, |a, v| a.max(v.abs()))
    }
}

/// Finite-difference curvature evaluator with difference step `h`.
pub struct CurvatureOracle<'a> {
    dim: usize,
    h: f64,
    metric: &'a MetricFn<'a>,
}

impl<'a> CurvatureOracle<'a> {
    pub fn new(dim: usize, h: f64, metric: &'a MetricFn<'a>) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::OracleTooLarge(format!(
                "dimension {dim} outside 1..={MAX_DIM}"
            )));
        }
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::InvalidGrid(format!("oracle step must be positive, got {h}")));
        }
        Ok(Self { dim, h, metric })
    }

    fn shifted(&self, p: &[f64], k: usize, s: f64) -> Vec<f64> {
        let mut q = p.to_vec();
        q[k] += s;
        q
    }

    fn checked_metric(&self, p: &[f64]) -> Result<DMatrix<f64>> {
        let g = (self.metric)(p);
        if g.nrows() != self.dim || g.ncols() != self.dim {
            return Err(Error::InvalidGrid(format!(
                "metric returned {}x{} components, expected {d}x{d}",
                g.nrows(),
                g.ncols(),
                d = self.dim
            )));
        }
        if g.iter().any(|v| !v.is_finite()) || g.clone().cholesky().is_none() {
            return Err(Error::NotPositiveDefinite { point: p.to_vec() });
        }
        Ok(g)
    }

    /// `Γ^a_{bc}` flattened as `[a][b][c]`.
    pub fn christoffel(&self, p: &[f64]) -> Result<Vec<f64>> {
        let n = self.dim;
        let g = self.checked_metric(p)?;
        let ginv = g
            .try_inverse()
            .ok_or_else(|| Error::NotPositiveDefinite { point: p.to_vec() })?;
        // dg[k][i][j] = ∂k g_ij
        let mut dg = vec![0.0; n * n * n];
        for k in 0..n {
            let gp = self.checked_metric(&self.shifted(p, k, self.h))?;
            let gm = self.checked_metric(&self.shifted(p, k, -self.h))?;
            for i in 0..n {
                for j in 0..n {
                    dg[(k * n + i) * n + j] = (gp[(i, j)] - gm[(i, j)]) / (2.0 * self.h);
                }
            }
        }
        let d = |k: usize, i: usize, j: usize| dg[(k * n + i) * n + j];
        let mut gamma = vec![0.0; n * n * n];
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    let mut s = 0.0;
                    for e in 0..n {
                        s += ginv[(a, e)] * (d(b, e, c) + d(c, e, b) - d(e, b, c));
                    }
                    gamma[(a * n + b) * n + c] = 0.5 * s;
                }
            }
        }
        Ok(gamma)
    }

    pub fn at(&self, p: &[f64]) -> Result<RiemannTensor> {
        let n = self.dim;
        if p.len() != n {
            return Err(Error::InvalidGrid(format!(
                "point has {} coordinates, expected {n}",
                p.len()
            )));
        }
        let g = self.checked_metric(p)?;
        let gam = self.christoffel(p)?;
        let mut dgam = vec![0.0; n * n * n * n]; // [k][a][b][c] = ∂k Γ^a_bc
        for k in 0..n {
            let gp = self.christoffel(&self.shifted(p, k, self.h))?;
            let gm = self.christoffel(&self.shifted(p, k, -self.h))?;
            for (m, (x, y)) in gp.iter().zip(&gm).enumerate() {
                dgam[k * n * n * n + m] = (x - y) / (2.0 * self.h);
            }
        }
        let gi = |a: usize, b: usize, c: usize| gam[(a * n + b) * n + c];
        let dgi = |k: usize, a: usize, b: usize, c: usize| dgam[((k * n + a) * n + b) * n + c];
        // R^a_{bcd}
        let mut up = vec![0.0; n * n * n * n];
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        let mut v = dgi(c, a, d, b) - dgi(d, a, c, b);
                        for e in 0..n {
                            v += gi(a, c, e) * gi(e, d, b) - gi(a, d, e) * gi(e, c, b);
                        }
                        up[((a * n + b) * n + c) * n + d] = v;
                    }
                }
            }
        }
        let upi = |a: usize, b: usize, c: usize, d: usize| up[((a * n + b) * n + c) * n + d];
        let mut lowered = vec![0.0; n * n * n * n];
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        let mut v = 0.0;
                        for e in 0..n {
                            v += g[(a, e)] * upi(e, b, c, d);
                        }
                        lowered[((a * n + b) * n + c) * n + d] = v;
                    }
                }
            }
        }
        let mut ricci = DMatrix::zeros(n, n);
        for b in 0..n {
            for d in 0..n {
                ricci[(b, d)] = (0..n).map(|a| upi(a, b, a, d)).sum();
            }
        }
        let ginv = g.clone().try_inverse().expect("checked positive definite");
        let scalar = ginv.component_mul(&ricci).sum();
        Ok(RiemannTensor {
            dim: n,
            point: p.to_vec(),
            metric: g,
            lowered,
            ricci,
            scalar,
        })
    }
}

/// Evaluates the oracle at every point of `points`.
pub fn generic_curvature_oracle(
    dim: usize,
    h: f64,
    metric: &MetricFn<'_>,
    points: &[Vec<f64>],
) -> Result<Vec<RiemannTensor>> {
    if points.len() > MAX_POINTS {
        return Err(Error::OracleTooLarge(format!(
            "{} evaluation points exceed the cap of {MAX_POINTS}",
            points.len()
        )));
    }
    let oracle = CurvatureOracle::new(dim, h, metric)?;
    points.iter().map(|p| oracle.at(p)).collect()
}

/// Oracle Gauss curvature of a sampled conformal torus at the given nodes,
/// through a C² spline interpolant of the nodal `u`.
pub fn torus_oracle_gauss(m: &ConformalTorusMetric, nodes: &[usize], h: f64) -> Result<Vec<f64>> {
    let spline = PeriodicSpline2::new(m.grid(), m.u());
    let metric = move |p: &[f64]| {
        let e = (2.0 * spline.eval(p[0], p[1]).v).exp();
        DMatrix::from_diagonal_element(2, 2, e)
    };
    let g = m.grid();
    let points: Vec<Vec<f64>> = nodes
        .iter()
        .map(|&k| vec![g.x(k % g.nx), g.y(k / g.nx)])
        .collect();
    Ok(generic_curvature_oracle(2, h, &metric, &points)?
        .into_iter()
        .map(|r| 0.5 * r.scalar)
        .collect())
}
