//! Normal frames along closed geodesics, the second variation of length and
//! the first variation of length under Ricci flow.
//!
//! The frame is `e_0 = J V` (the normal inside the loop surface) followed, on
//! a warped product, by `n − 2` normals `ψ⁻¹ ∂_{θ_j}` pointing along the
//! sphere factor out of the surface. Its connection one-form
//! `ω_jk = ⟨∇_V e_j, e_k⟩` is measured with finite differences of the frame
//! and Christoffel symbols from the generic curvature oracle, so nothing here
//! assumes the frame is parallel. A parallel frame is obtained by
//! transporting with `−ω`; the holonomy defect after one loop is spread at a
//! constant rate, which is the reported `rotation_rate`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{geodesic_residual, loop_length, LoopPolyline, LoopSurface};
use crate::error::{Error, Result};
use crate::geom::oracle::MetricFn;
use crate::geom::CurvatureOracle;

/// Finite-difference step for the oracle Christoffels.
const ORACLE_STEP: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeodesicFrame {
    pub dim: usize,
    pub length: f64,
    /// Arclength at each vertex, starting from zero.
    pub arclength: Vec<f64>,
    /// Unit tangent per segment, in surface coordinates.
    pub tangents: Vec<[f64; 2]>,
    /// In-surface unit normal per vertex.
    pub normals: Vec<[f64; 2]>,
    /// Number of normals orthogonal to the loop surface (`n − 2`).
    pub out_of_plane: usize,
    /// Antisymmetrized connection matrix per segment, `(n−1)²` row-major.
    pub omega: Vec<Vec<f64>>,
    /// `sup |ω|` of the coordinate frame.
    pub coordinate_rotation: f64,
    pub holonomy_angle: f64,
    /// Rotation rate of the corrected parallel frame: `holonomy / length`.
    pub rotation_rate: f64,
    pub orthonormality_defect: f64,
    pub residual: f64,
}

impl GeodesicFrame {
    /// Number of normal fields, `n − 1`.
    pub fn normals_count(&self) -> usize {
        self.dim - 1
    }

    /// `(n − 1)·rotation_rate²·length²`.
    pub fn c_eff(&self) -> f64 {
        (self.dim as f64 - 1.0) * (self.rotation_rate * self.length).powi(2)
    }
}

fn unit_normal(s: &LoopSurface, p: [f64; 2], v: [f64; 2]) -> [f64; 2] {
    let c = s.coeffs(p[0], p[1]);
    [-v[1] * (c.b / c.a).sqrt(), v[0] * (c.a / c.b).sqrt()]
}

/// Full-dimensional coordinates `(x, θ, a[, c])` for the warped product,
/// restricted to at most four dimensions: the product of `S¹` with a great
/// `S³` through the loop surface is totally geodesic, and every extra sphere
/// direction behaves like the ones kept.
fn warped_oracle_metric<'a>(s: &'a LoopSurface, dim: usize) -> impl Fn(&[f64]) -> DMatrix<f64> + Sync + 'a {
    move |p: &[f64]| {
        let (f, g) = s.warping(p[0]).expect("warped surface");
        let (phi2, psi2) = (f[0] * f[0], g[0] * g[0]);
        let sa = p[2].sin();
        let mut m = DMatrix::zeros(dim, dim);
        m[(0, 0)] = phi2;
        m[(2, 2)] = psi2;
        if dim == 3 {
            m[(1, 1)] = psi2 * sa * sa;
        } else {
            let sc = p[3].sin();
            m[(1, 1)] = psi2 * sa * sa * sc * sc;
            m[(3, 3)] = psi2 * sa * sa;
        }
        m
    }
}

/// Builds the normal frame along a geodesic polyline and measures its
/// rotation. Rejects curves whose geodesic residual exceeds `residual_tol`.
pub fn build_frame(c: &LoopPolyline, s: &LoopSurface, residual_tol: f64) -> Result<GeodesicFrame> {
    let residual = geodesic_residual(c, s);
    if !(residual <= residual_tol) {
        return Err(Error::InvalidLoop(format!(
            "geodesic residual {residual} exceeds {residual_tol}"
        )));
    }
    let n = c.len();
    let seg = c.segment_lengths(s);
    let length: f64 = seg.iter().sum();
    let mut arclength = Vec::with_capacity(n);
    let mut acc = 0.0;
    for l in &seg {
        arclength.push(acc);
        acc += l;
    }
    let tangents: Vec<[f64; 2]> = (0..n)
        .map(|i| {
            let (a, b) = c.segment(i);
            [(b[0] - a[0]) / seg[i], (b[1] - a[1]) / seg[i]]
        })
        .collect();
    let mut normals = Vec::with_capacity(n);
    let mut defect = 0.0_f64;
    for i in 0..n {
        let p = c.vertex(i);
        let t = tangents[i];
        let tp = tangents[(i + n - 1) % n];
        let avg = [t[0] + tp[0], t[1] + tp[1]];
        let norm = s.norm(p[0], p[1], avg);
        let v = [avg[0] / norm, avg[1] / norm];
        let e = unit_normal(s, p, v);
        let k = s.coeffs(p[0], p[1]);
        defect = defect
            .max((k.a * e[0] * e[0] + k.b * e[1] * e[1] - 1.0).abs())
            .max((k.a * e[0] * v[0] + k.b * e[1] * v[1]).abs());
        normals.push(e);
    }
    let dim = s.dim();
    let m = dim - 1;
    let mut omega = vec![vec![0.0; m * m]; n];
    if s.is_warped() {
        let od = dim.min(4);
        let metric = warped_oracle_metric(s, od);
        let metric_dyn: &MetricFn = &metric;
        let oracle = CurvatureOracle::new(od, ORACLE_STEP, metric_dyn)?;
        let half = std::f64::consts::FRAC_PI_2;
        // frame vectors in oracle coordinates at a vertex
        let frame_at = |i: usize| -> Vec<Vec<f64>> {
            let p = c.vertex(i);
            let e = normals[i % n];
            let (_, g) = s.warping(p[0]).expect("warped surface");
            let mut out = Vec::with_capacity(od - 1);
            let mut v = vec![0.0; od];
            v[0] = e[0];
            v[1] = e[1];
            out.push(v);
            for j in 2..od {
                let mut v = vec![0.0; od];
                v[j] = 1.0 / g[0];
                out.push(v);
            }
            out
        };
        for i in 0..n {
            let (a, b) = c.segment(i);
            let mid = [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
            let mut q = vec![mid[0], mid[1]];
            q.extend(std::iter::repeat(half).take(od - 2));
            let gam = oracle.christoffel(&q)?;
            let gmat = metric(&q);
            let f0 = frame_at(i);
            let f1 = frame_at(i + 1);
            let mut t = vec![0.0; od];
            t[0] = tangents[i][0];
            t[1] = tangents[i][1];
            let bar: Vec<Vec<f64>> = f0.iter().zip(&f1).map(|(x, y)| x.iter().zip(y).map(|(a, b)| 0.5 * (a + b)).collect()).collect();
            let cov: Vec<Vec<f64>> = (0..od - 1)
                .map(|j| {
                    (0..od)
                        .map(|k| {
                            let mut v = (f1[j][k] - f0[j][k]) / seg[i];
                            for a in 0..od {
                                for b in 0..od {
                                    v += gam[(k * od + a) * od + b] * t[a] * bar[j][b];
                                }
                            }
                            v
                        })
                        .collect()
                })
                .collect();
            let inner = |x: &[f64], y: &[f64]| {
                let mut acc = 0.0;
                for a in 0..od {
                    acc += gmat[(a, a)] * x[a] * y[a];
                }
                acc
            };
            // normals beyond the fourth dimension copy the last one, which is
            // decoupled from the rest by symmetry
            let src = |j: usize| j.min(od - 2);
            for j in 0..m {
                for k in 0..m {
                    if j == k || (src(j) == src(k)) {
                        continue;
                    }
                    let w = 0.5 * (inner(&cov[src(j)], &bar[src(k)]) - inner(&cov[src(k)], &bar[src(j)]));
                    omega[i][j * m + k] = w;
                }
            }
        }
    }
    let coordinate_rotation = omega
        .iter()
        .map(|w| spectral_norm(&DMatrix::from_row_slice(m, m, w)))
        .fold(0.0, f64::max);
    // transport coefficients: c' = Ω c along each segment
    let mut hol = DMatrix::<f64>::identity(m, m);
    for i in 0..n {
        let a = DMatrix::from_row_slice(m, m, &omega[i]) * seg[i];
        hol = expm(&a) * hol;
    }
    let skew = (&hol - hol.transpose()) * 0.5;
    let holonomy_angle = spectral_norm(&skew).min(1.0).asin();
    Ok(GeodesicFrame {
        dim,
        length,
        arclength,
        tangents,
        normals,
        out_of_plane: dim - 2,
        omega,
        coordinate_rotation,
        holonomy_angle,
        rotation_rate: holonomy_angle / length,
        orthonormality_defect: defect,
        residual,
    })
}

fn spectral_norm(a: &DMatrix<f64>) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    a.singular_values().iter().copied().fold(0.0, f64::max)
}

/// Taylor exponential with scaling and squaring; the arguments here are tiny.
fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let norm = a.amax();
    let mut sq = 0;
    while norm / 2f64.powi(sq) > 0.25 {
        sq += 1;
    }
    let b = a / 2f64.powi(sq);
    let mut term = DMatrix::<f64>::identity(n, n);
    let mut out = term.clone();
    for k in 1..=10 {
        term = &term * &b / k as f64;
        out += &term;
    }
    for _ in 0..sq {
        out = &out * &out;
    }
    out
}

/// Normal vector field along a loop, as frame components per vertex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestField {
    /// `components[j][i]` is the `e_j` component at vertex `i`.
    pub components: Vec<Vec<f64>>,
}

impl TestField {
    /// `f(j, s/length)` for each normal `j`.
    pub fn from_fn(frame: &GeodesicFrame, f: impl Fn(usize, f64) -> f64) -> Self {
        let components = (0..frame.normals_count())
            .map(|j| frame.arclength.iter().map(|s| f(j, s / frame.length)).collect())
            .collect();
        Self { components }
    }

    /// The frame field `e_j`.
    pub fn frame_field(frame: &GeodesicFrame, j: usize) -> Self {
        Self::from_fn(frame, |k, _| if k == j { 1.0 } else { 0.0 })
    }

    /// Sum of all frame fields.
    pub fn frame_sum(frame: &GeodesicFrame) -> Self {
        Self::from_fn(frame, |_, _| 1.0)
    }

    /// Random trigonometric polynomial of degree `modes` in every component.
    pub fn random(frame: &GeodesicFrame, modes: usize, rng: &mut impl rand::Rng) -> Self {
        let m = frame.normals_count();
        let coef: Vec<Vec<(f64, f64)>> = (0..m)
            .map(|_| (0..=modes).map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect())
            .collect();
        Self::from_fn(frame, |j, t| {
            coef[j]
                .iter()
                .enumerate()
                .map(|(k, (a, b))| {
                    let w = std::f64::consts::TAU * k as f64 * t;
                    a * w.cos() + b * w.sin()
                })
                .sum()
        })
    }
}

/// `∫ (|∇_V X|² − ⟨R(V, X)X, V⟩) ds` for `X = Σ f_j e_j`.
pub fn stability_integral(c: &LoopPolyline, frame: &GeodesicFrame, x: &TestField, s: &LoopSurface) -> f64 {
    let n = c.len();
    let m = frame.normals_count();
    let mut total = 0.0;
    for i in 0..n {
        let (a, b) = c.segment(i);
        let mid = [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
        let l = if i + 1 < n {
            frame.arclength[i + 1] - frame.arclength[i]
        } else {
            frame.length - frame.arclength[i]
        };
        let j1 = (i + 1) % n;
        let fbar: Vec<f64> = (0..m).map(|j| 0.5 * (x.components[j][i] + x.components[j][j1])).collect();
        let mut grad2 = 0.0;
        for k in 0..m {
            let mut d = (x.components[k][j1] - x.components[k][i]) / l;
            for j in 0..m {
                d += fbar[j] * frame.omega[i][j * m + k];
            }
            grad2 += d * d;
        }
        let t = frame.tangents[i];
        let k_in = s.gauss(mid[0], mid[1]);
        let k_out = s.normal_sectional(mid[0], mid[1], t);
        let mut curv = k_in * fbar[0] * fbar[0];
        for f in &fbar[1..] {
            curv += k_out * f * f;
        }
        total += l * (grad2 - curv);
    }
    total
}

/// `d/dt length_{g(t)}(γ) = −∫ Rc(V, V) ds` under Ricci flow, for fixed `γ`.
pub fn length_derivative(c: &LoopPolyline, s: &LoopSurface) -> f64 {
    let seg = c.segment_lengths(s);
    let mut acc = 0.0;
    for (i, l) in seg.iter().enumerate() {
        let (a, b) = c.segment(i);
        let mid = [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
        let t = [(b[0] - a[0]) / l, (b[1] - a[1]) / l];
        acc += l * s.ricci(mid[0], mid[1], t);
    }
    -acc
}

/// Centered difference of `length(γ)` between metrics at `t − dt` and `t + dt`.
pub fn length_rate_fd(c: &LoopPolyline, before: &LoopSurface, after: &LoopSurface, dt: f64) -> f64 {
    (loop_length(c, after) - loop_length(c, before)) / (2.0 * dt)
}
