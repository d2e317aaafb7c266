//! Periodic discretization substrate: uniform grids on circles and 2-tori,
//! centered difference stencils, and periodic cubic B-spline interpolation
//! used wherever a field must be evaluated off the nodes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest admissible node count per periodic direction.
pub const MIN_NODES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeriodicGrid2 {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
}

impl PeriodicGrid2 {
    pub fn new(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Self> {
        let grid = Self { nx, ny, lx, ly };
        grid.validate()?;
        Ok(grid)
    }

    /// Square grid on `[0, 2π)²`.
    pub fn square(n: usize) -> Result<Self> {
        Self::new(n, n, std::f64::consts::TAU, std::f64::consts::TAU)
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx < MIN_NODES || self.ny < MIN_NODES {
            return Err(Error::InvalidGrid(format!(
                "need at least {MIN_NODES} nodes per direction, got {}x{}",
                self.nx, self.ny
            )));
        }
        let ok = |l: f64| l.is_finite() && l > 0.0;
        if !ok(self.lx) || !ok(self.ly) {
            return Err(Error::InvalidGrid(format!(
                "periods must be finite and positive, got ({}, {})",
                self.lx, self.ly
            )));
        }
        Ok(())
    }

    #[inline]
    pub fn hx(&self) -> f64 {
        self.lx / self.nx as f64
    }

    #[inline]
    pub fn hy(&self) -> f64 {
        self.ly / self.ny as f64
    }

    #[inline]
    pub fn h_min(&self) -> f64 {
        self.hx().min(self.hy())
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn cell_area(&self) -> f64 {
        self.hx() * self.hy()
    }

    /// Row-major index with periodic wrapping.
    #[inline]
    pub fn idx(&self, i: isize, j: isize) -> usize {
        let i = i.rem_euclid(self.nx as isize) as usize;
        let j = j.rem_euclid(self.ny as isize) as usize;
        j * self.nx + i
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.hx()
    }

    #[inline]
    pub fn y(&self, j: usize) -> f64 {
        j as f64 * self.hy()
    }

    /// Samples `f(x, y)` at every node.
    pub fn sample(&self, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        for j in 0..self.ny {
            for i in 0..self.nx {
                out.push(f(self.x(i), self.y(j)));
            }
        }
        out
    }

    /// Centered first difference in x.
    pub fn d_x(&self, f: &[f64]) -> Vec<f64> {
        let c = 0.5 / self.hx();
        let (nx, ny) = (self.nx, self.ny);
        let mut out = vec![0.0; f.len()];
        for j in 0..ny {
            let row = j * nx;
            for i in 0..nx {
                let ip = if i + 1 == nx { 0 } else { i + 1 };
                let im = if i == 0 { nx - 1 } else { i - 1 };
                out[row + i] = (f[row + ip] - f[row + im]) * c;
            }
        }
        out
    }

    /// Centered first difference in y.
    pub fn d_y(&self, f: &[f64]) -> Vec<f64> {
        let c = 0.5 / self.hy();
        let (nx, ny) = (self.nx, self.ny);
        let mut out = vec![0.0; f.len()];
        for j in 0..ny {
            let jp = if j + 1 == ny { 0 } else { j + 1 } * nx;
            let jm = if j == 0 { ny - 1 } else { j - 1 } * nx;
            let row = j * nx;
            for i in 0..nx {
                out[row + i] = (f[jp + i] - f[jm + i]) * c;
            }
        }
        out
    }

    /// Compact five-point Laplacian `f_xx + f_yy`.
    pub fn laplacian(&self, f: &[f64]) -> Vec<f64> {
        let (cx, cy) = (1.0 / (self.hx() * self.hx()), 1.0 / (self.hy() * self.hy()));
        let (nx, ny) = (self.nx, self.ny);
        let mut out = vec![0.0; f.len()];
        for j in 0..ny {
            let jp = if j + 1 == ny { 0 } else { j + 1 } * nx;
            let jm = if j == 0 { ny - 1 } else { j - 1 } * nx;
            let row = j * nx;
            for i in 0..nx {
                let ip = if i + 1 == nx { 0 } else { i + 1 };
                let im = if i == 0 { nx - 1 } else { i - 1 };
                let c = f[row + i];
                out[row + i] = (f[row + ip] - 2.0 * c + f[row + im]) * cx
                    + (f[jp + i] - 2.0 * c + f[jm + i]) * cy;
            }
        }
        out
    }

    /// Trapezoidal (spectrally accurate for periodic data) integral `∫ f dx dy`.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        f.iter().sum::<f64>() * self.cell_area()
    }
}

/// Uniform periodic 1D grid on `[0, period)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeriodicGrid1 {
    pub n: usize,
    pub period: f64,
}

impl PeriodicGrid1 {
    pub fn new(n: usize, period: f64) -> Result<Self> {
        if n < MIN_NODES {
            return Err(Error::InvalidGrid(format!(
                "need at least {MIN_NODES} nodes, got {n}"
            )));
        }
        if !(period.is_finite() && period > 0.0) {
            return Err(Error::InvalidGrid(format!("period must be positive, got {period}")));
        }
        Ok(Self { n, period })
    }

    #[inline]
    pub fn h(&self) -> f64 {
        self.period / self.n as f64
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.h()
    }

    #[inline]
    pub fn wrap(&self, i: isize) -> usize {
        i.rem_euclid(self.n as isize) as usize
    }

    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        (0..self.n).map(|i| f(self.x(i))).collect()
    }

    pub fn integrate(&self, f: &[f64]) -> f64 {
        f.iter().sum::<f64>() * self.h()
    }

    /// Centered first difference.
    pub fn d(&self, f: &[f64]) -> Vec<f64> {
        let c = 0.5 / self.h();
        let n = self.n;
        (0..n)
            .map(|i| {
                let ip = if i + 1 == n { 0 } else { i + 1 };
                let im = if i == 0 { n - 1 } else { i - 1 };
                (f[ip] - f[im]) * c
            })
            .collect()
    }
}

// B-spline prefilter pole.
const POLE: f64 = -0.267_949_192_431_122_7; // sqrt(3) - 2

/// Replaces `values` by periodic cubic B-spline coefficients interpolating them.
fn prefilter_periodic(values: &mut [f64]) {
    let n = values.len();
    let z = POLE;
    let zn = z.powi(n as i32);
    // causal initialization: sum_{k=0}^{n-1} z^k f[-k]
    let mut acc = values[0];
    let mut zk = z;
    for k in 1..n {
        acc += zk * values[n - k];
        zk *= z;
    }
    let mut plus = vec![0.0; n];
    plus[0] = acc / (1.0 - zn);
    for k in 1..n {
        plus[k] = values[k] + z * plus[k - 1];
    }
    // anti-causal initialization
    let mut acc = 0.0;
    let mut zk = 1.0;
    for j in 0..n {
        acc += zk * plus[(n - 1 + j) % n];
        zk *= z;
    }
    let mut minus = vec![0.0; n];
    minus[n - 1] = -z * acc / (1.0 - zn);
    for k in (0..n - 1).rev() {
        minus[k] = z * (minus[k + 1] - plus[k]);
    }
    for (v, m) in values.iter_mut().zip(minus) {
        *v = 6.0 * m;
    }
}

#[inline]
fn basis(w: f64) -> ([f64; 4], [f64; 4], [f64; 4]) {
    let w2 = w * w;
    let w3 = w2 * w;
    let om = 1.0 - w;
    (
        [
            om * om * om / 6.0,
            (3.0 * w3 - 6.0 * w2 + 4.0) / 6.0,
            (-3.0 * w3 + 3.0 * w2 + 3.0 * w + 1.0) / 6.0,
            w3 / 6.0,
        ],
        [
            -0.5 * om * om,
            1.5 * w2 - 2.0 * w,
            -1.5 * w2 + w + 0.5,
            0.5 * w2,
        ],
        [om, 3.0 * w - 2.0, 1.0 - 3.0 * w, w],
    )
}

#[inline]
fn locate(x: f64, h: f64) -> (isize, f64) {
    let t = x / h;
    let k = t.floor();
    (k as isize, t - k)
}

/// Periodic cubic B-spline interpolant of nodal data (C² everywhere).
#[derive(Debug, Clone)]
pub struct PeriodicSpline1 {
    n: usize,
    h: f64,
    coef: Vec<f64>,
}

impl PeriodicSpline1 {
    pub fn new(values: &[f64], period: f64) -> Self {
        let mut coef = values.to_vec();
        prefilter_periodic(&mut coef);
        Self {
            n: values.len(),
            h: period / values.len() as f64,
            coef,
        }
    }

    /// Value, first and second derivative at `x`.
    pub fn eval(&self, x: f64) -> [f64; 3] {
        let (k, w) = locate(x, self.h);
        let (b, db, ddb) = basis(w);
        let n = self.n as isize;
        let mut out = [0.0; 3];
        for m in 0..4 {
            let c = self.coef[(k + m as isize - 1).rem_euclid(n) as usize];
            out[0] += b[m] * c;
            out[1] += db[m] * c;
            out[2] += ddb[m] * c;
        }
        out[1] /= self.h;
        out[2] /= self.h * self.h;
        out
    }

    pub fn value(&self, x: f64) -> f64 {
        self.eval(x)[0]
    }
}

/// Value, gradient and Hessian of a 2D interpolant.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SplineSample {
    pub v: f64,
    pub dx: f64,
    pub dy: f64,
    pub dxx: f64,
    pub dxy: f64,
    pub dyy: f64,
}

/// Tensor-product periodic cubic B-spline on a [`PeriodicGrid2`].
#[derive(Debug, Clone)]
pub struct PeriodicSpline2 {
    grid: PeriodicGrid2,
    coef: Vec<f64>,
}

impl PeriodicSpline2 {
    pub fn new(grid: &PeriodicGrid2, values: &[f64]) -> Self {
        let (nx, ny) = (grid.nx, grid.ny);
        let mut coef = values.to_vec();
        for j in 0..ny {
            prefilter_periodic(&mut coef[j * nx..(j + 1) * nx]);
        }
        let mut col = vec![0.0; ny];
        for i in 0..nx {
            for j in 0..ny {
                col[j] = coef[j * nx + i];
            }
            prefilter_periodic(&mut col);
            for j in 0..ny {
                coef[j * nx + i] = col[j];
            }
        }
        Self { grid: *grid, coef }
    }

    pub fn grid(&self) -> &PeriodicGrid2 {
        &self.grid
    }

    pub fn eval(&self, x: f64, y: f64) -> SplineSample {
        let g = &self.grid;
        let (hx, hy) = (g.hx(), g.hy());
        let (kx, wx) = locate(x, hx);
        let (ky, wy) = locate(y, hy);
        let (bx, dbx, ddbx) = basis(wx);
        let (by, dby, ddby) = basis(wy);
        let mut s = SplineSample::default();
        for b in 0..4 {
            let j = (ky + b as isize - 1).rem_euclid(g.ny as isize) as usize;
            let row = j * g.nx;
            let (mut r0, mut r1, mut r2) = (0.0, 0.0, 0.0);
            for a in 0..4 {
                let i = (kx + a as isize - 1).rem_euclid(g.nx as isize) as usize;
                let c = self.coef[row + i];
                r0 += bx[a] * c;
                r1 += dbx[a] * c;
                r2 += ddbx[a] * c;
            }
            s.v += by[b] * r0;
            s.dx += by[b] * r1;
            s.dxx += by[b] * r2;
            s.dy += dby[b] * r0;
            s.dxy += dby[b] * r1;
            s.dyy += ddby[b] * r0;
        }
        s.dx /= hx;
        s.dxx /= hx * hx;
        s.dy /= hy;
        s.dyy /= hy * hy;
        s.dxy /= hx * hy;
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    #[test]
    fn grid_rejects_coarse_or_degenerate() {
        assert!(PeriodicGrid2::new(4, 16, 1.0, 1.0).is_err());
        assert!(PeriodicGrid2::new(16, 16, 0.0, 1.0).is_err());
        assert!(PeriodicGrid2::new(16, 16, 1.0, f64::NAN).is_err());
        assert!(PeriodicGrid1::new(7, 1.0).is_err());
    }

    #[test]
    fn spline_interpolates_nodes_1d() {
        let g = PeriodicGrid1::new(24, TAU).unwrap();
        let f = g.sample(|x| (x).sin() + 0.3 * (3.0 * x).cos());
        let s = PeriodicSpline1::new(&f, TAU);
        for (i, fi) in f.iter().enumerate() {
            assert!((s.value(g.x(i)) - fi).abs() < 1e-12);
        }
    }

    #[test]
    fn spline_derivatives_converge_2d() {
        let err = |n: usize| {
            let g = PeriodicGrid2::square(n).unwrap();
            let f = g.sample(|x, y| (x).sin() * (2.0 * y).cos());
            let s = PeriodicSpline2::new(&g, &f);
            let (x, y) = (0.7, 2.1);
            let e = s.eval(x, y);
            let exact_dxy = -2.0 * x.cos() * (2.0 * y).sin();
            let exact_dyy = -4.0 * x.sin() * (2.0 * y).cos();
            (e.dxy - exact_dxy).abs().max((e.dyy - exact_dyy).abs())
        };
        let (a, b) = (err(32), err(64));
        assert!(a < 1e-2 && b < a / 3.5, "{a} {b}");
    }

    #[test]
    fn compact_laplacian_sums_to_zero() {
        let g = PeriodicGrid2::new(16, 12, 2.0, 3.0).unwrap();
        let f = g.sample(|x, y| (x * 1.3).sin().exp() + y * y.cos());
        let lap = g.laplacian(&f);
        let s: f64 = lap.iter().sum();
        assert!(s.abs() < 1e-10);
    }
}
