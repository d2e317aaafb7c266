//! Closed curves in winding classes, shortening to closed geodesics, `ℓ_g`
//! and the stable norm.
//!
//! Curves live in universal-cover coordinates. A polyline stores `N` vertices
//! and closes with the segment from vertex `N − 1` to vertex `0` shifted by the
//! winding times the periods. Lengths use the midpoint rule on each segment.
//!
//! Shortening minimizes the discrete energy `N Σ |segment|²_g` with L-BFGS.
//! By Cauchy–Schwarz `energy ≥ length²` with equality at equal spacing, so its
//! minimizers are equally spaced discrete geodesics and, started from an
//! equally spaced seed, the length never increases.

mod decay;
mod frame;
mod oracle;
mod surface;

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optim::{lbfgs, LbfgsOptions};

pub use decay::{decay_bound_check, decay_bound_from_series, track_min_lengths, DecayReport, LengthSeries};
pub use frame::{
    build_frame, length_derivative, length_rate_fd, stability_integral, GeodesicFrame, TestField,
};
pub use oracle::{dijkstra_cover_oracle, OracleResult, LATTICE_NODE_CAP, STENCIL_BIAS};
pub use surface::{Coeffs, LoopSurface};

/// Smallest vertex count of a polyline.
pub const MIN_VERTICES: usize = 16;

/// Free homotopy class: winding `(p, q)` on the torus, `k` around the `S¹`
/// factor of a warped product.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindingClass {
    Torus { p: i64, q: i64 },
    Warped { k: i64 },
}

impl WindingClass {
    pub fn vector(&self) -> [i64; 2] {
        match *self {
            WindingClass::Torus { p, q } => [p, q],
            WindingClass::Warped { k } => [k, 0],
        }
    }

    pub fn is_trivial(&self) -> bool {
        self.vector() == [0, 0]
    }

    pub fn multiple(&self, k: i64) -> Self {
        match *self {
            WindingClass::Torus { p, q } => WindingClass::Torus { p: k * p, q: k * q },
            WindingClass::Warped { k: j } => WindingClass::Warped { k: k * j },
        }
    }

    /// Largest absolute winding entry.
    pub fn extent(&self) -> usize {
        let [p, q] = self.vector();
        p.unsigned_abs().max(q.unsigned_abs()) as usize
    }

    fn matches(&self, surface: &LoopSurface) -> bool {
        matches!(self, WindingClass::Warped { .. }) == surface.is_warped()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoopPolyline {
    vertices: Vec<[f64; 2]>,
    winding: WindingClass,
    periods: [f64; 2],
}

impl LoopPolyline {
    pub fn new(vertices: Vec<[f64; 2]>, winding: WindingClass, periods: [f64; 2]) -> Result<Self> {
        if winding.is_trivial() {
            return Err(Error::InvalidLoop("trivial winding class".into()));
        }
        if vertices.len() < MIN_VERTICES {
            return Err(Error::InvalidLoop(format!(
                "{} vertices, need at least {MIN_VERTICES}",
                vertices.len()
            )));
        }
        if vertices.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidLoop("non-finite vertex".into()));
        }
        let c = Self {
            vertices,
            winding,
            periods,
        };
        for i in 0..c.len() {
            let (a, b) = c.segment(i);
            if a == b {
                return Err(Error::InvalidLoop(format!("repeated vertex at {i}")));
            }
        }
        Ok(c)
    }

    /// Straight segment from `origin` to its translate, with `n` vertices and
    /// a transverse wiggle `offset(t)`, `t ∈ [0, 1)`.
    pub fn straight(
        winding: WindingClass,
        periods: [f64; 2],
        origin: [f64; 2],
        n: usize,
        offset: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        let [p, q] = winding.vector();
        let w = [p as f64 * periods[0], q as f64 * periods[1]];
        let len = w[0].hypot(w[1]);
        let nrm = if len > 0.0 { [-w[1] / len, w[0] / len] } else { [0.0, 0.0] };
        let vertices = (0..n)
            .map(|i| {
                let t = i as f64 / n as f64;
                let o = offset(t);
                [origin[0] + t * w[0] + o * nrm[0], origin[1] + t * w[1] + o * nrm[1]]
            })
            .collect();
        Self::new(vertices, winding, periods)
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    pub fn winding(&self) -> WindingClass {
        self.winding
    }

    pub fn periods(&self) -> [f64; 2] {
        self.periods
    }

    /// Translation carried by one trip around the loop.
    pub fn shift(&self) -> [f64; 2] {
        let [p, q] = self.winding.vector();
        [p as f64 * self.periods[0], q as f64 * self.periods[1]]
    }

    /// Vertex `i` for `i ≤ N`, where vertex `N` is the shifted vertex `0`.
    pub fn vertex(&self, i: usize) -> [f64; 2] {
        let n = self.len();
        let v = self.vertices[i % n];
        if i >= n {
            let s = self.shift();
            [v[0] + s[0], v[1] + s[1]]
        } else {
            v
        }
    }

    pub fn segment(&self, i: usize) -> ([f64; 2], [f64; 2]) {
        (self.vertex(i), self.vertex(i + 1))
    }

    /// `g`-length of each segment.
    pub fn segment_lengths(&self, s: &LoopSurface) -> Vec<f64> {
        (0..self.len())
            .map(|i| {
                let (a, b) = self.segment(i);
                let mid = [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
                s.norm(mid[0], mid[1], [b[0] - a[0], b[1] - a[1]])
            })
            .collect()
    }

    /// Same loop traversed `k` times.
    pub fn iterate(&self, k: usize) -> Result<Self> {
        let s = self.shift();
        let mut v = Vec::with_capacity(k * self.len());
        for j in 0..k {
            v.extend(self.vertices.iter().map(|p| [p[0] + j as f64 * s[0], p[1] + j as f64 * s[1]]));
        }
        Self::new(v, self.winding.multiple(k as i64), self.periods)
    }

    /// `self` followed by `other`, joined by a straight excursion to the
    /// lattice translate of `other`'s first vertex nearest to our base point.
    pub fn concat(&self, other: &Self) -> Result<Self> {
        if self.periods != other.periods || !self.winding.matches_kind(&other.winding) {
            return Err(Error::InvalidLoop("cannot concatenate loops on different surfaces".into()));
        }
        let base = self.vertex(self.len());
        let w0 = other.vertices[0];
        let per = self.periods;
        // translate other so its start is the nearest copy to base
        let mut t = [
            ((base[0] - w0[0]) / per[0]).round() * per[0],
            ((base[1] - w0[1]) / per[1]).round() * per[1],
        ];
        let mut start = [w0[0] + t[0], w0[1] + t[1]];
        let mut v = self.vertices.clone();
        let gap = [start[0] - base[0], start[1] - base[1]];
        // roundoff-sized gaps would make the excursion vertices coincide
        let far = gap[0].abs() > 1e-12 * per[0] || gap[1].abs() > 1e-12 * per[1];
        if !far {
            t = [base[0] - w0[0], base[1] - w0[1]];
            start = base;
        }
        if far {
            v.push(base);
        }
        v.extend(other.vertices.iter().map(|p| [p[0] + t[0], p[1] + t[1]]));
        if far {
            // return to base after closing other's loop
            let s = other.shift();
            v.push([start[0] + s[0], start[1] + s[1]]);
        }
        let [a, b] = self.winding.vector();
        let [c, d] = other.winding.vector();
        let winding = match self.winding {
            WindingClass::Torus { .. } => WindingClass::Torus { p: a + c, q: b + d },
            WindingClass::Warped { .. } => WindingClass::Warped { k: a + c },
        };
        // closure: last vertex connects to v0 + shift(self) + shift(other)
        Self::new(v, winding, self.periods)
    }

    /// Resamples to `n` vertices equally spaced in `g`-arclength (linear
    /// interpolation in coordinates).
    pub fn resample(&self, s: &LoopSurface, n: usize) -> Result<Self> {
        let seg = self.segment_lengths(s);
        let total: f64 = seg.iter().sum();
        let mut out = Vec::with_capacity(n);
        let mut i = 0;
        let mut acc = 0.0;
        for j in 0..n {
            let target = total * j as f64 / n as f64;
            while i + 1 < seg.len() && acc + seg[i] < target {
                acc += seg[i];
                i += 1;
            }
            let w = if seg[i] > 0.0 { ((target - acc) / seg[i]).clamp(0.0, 1.0) } else { 0.0 };
            let (a, b) = self.segment(i);
            out.push([a[0] + w * (b[0] - a[0]), a[1] + w * (b[1] - a[1])]);
        }
        Self::new(out, self.winding, self.periods)
    }

    /// CSV dump: `index,x,y` plus `length` and `residual` comment lines.
    pub fn to_csv(&self, length: f64, residual: f64) -> String {
        let mut out = format!("# length={length}\n# residual={residual}\nindex,x,y\n");
        for (i, v) in self.vertices.iter().enumerate() {
            let _ = writeln!(out, "{i},{},{}", v[0], v[1]);
        }
        out
    }
}

impl WindingClass {
    fn matches_kind(&self, other: &WindingClass) -> bool {
        std::mem::discriminant(self) == std::mem::discriminant(other)
    }
}

fn check_surface(c: &LoopPolyline, s: &LoopSurface) -> Result<()> {
    if !c.winding.matches(s) || c.periods != s.periods() {
        return Err(Error::InvalidLoop("loop and surface do not match".into()));
    }
    Ok(())
}

/// `g`-length by the midpoint rule.
pub fn loop_length(c: &LoopPolyline, s: &LoopSurface) -> f64 {
    c.segment_lengths(s).iter().sum()
}

/// Discrete energy `N Σ Q_i` (with `Q_i = |segment|²_g`) and its gradient
/// with respect to the stored vertex coordinates.
fn energy(flat: &[f64], shift: [f64; 2], s: &LoopSurface) -> (f64, Vec<f64>) {
    let n = flat.len() / 2;
    let mut e = 0.0;
    let mut g = vec![0.0; flat.len()];
    for i in 0..n {
        let j = (i + 1) % n;
        let a = [flat[2 * i], flat[2 * i + 1]];
        let mut b = [flat[2 * j], flat[2 * j + 1]];
        if j == 0 {
            b = [b[0] + shift[0], b[1] + shift[1]];
        }
        let d = [b[0] - a[0], b[1] - a[1]];
        let c = s.coeffs(0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1]));
        e += c.a * d[0] * d[0] + c.b * d[1] * d[1];
        // ∂Q/∂b = 2(a d_x, b d_y) + ½∇(a d_x² + b d_y²); ∂Q/∂a flips the first term
        let hx = 0.5 * (c.ax * d[0] * d[0] + c.bx * d[1] * d[1]);
        let hy = 0.5 * (c.ay * d[0] * d[0] + c.by * d[1] * d[1]);
        let lx = 2.0 * c.a * d[0];
        let ly = 2.0 * c.b * d[1];
        g[2 * j] += lx + hx;
        g[2 * j + 1] += ly + hy;
        g[2 * i] += -lx + hx;
        g[2 * i + 1] += -ly + hy;
    }
    let nf = n as f64;
    (nf * e, g.into_iter().map(|v| nf * v).collect())
}

/// Largest discrete geodesic curvature: the normal component of `∂L/∂v_i`
/// over the mean length of the two adjacent segments.
pub fn geodesic_residual(c: &LoopPolyline, s: &LoopSurface) -> f64 {
    let n = c.len();
    let seg = c.segment_lengths(s);
    let mut grad = vec![[0.0; 2]; n];
    for i in 0..n {
        let (a, b) = c.segment(i);
        let d = [b[0] - a[0], b[1] - a[1]];
        let k = s.coeffs(0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1]));
        let l = seg[i];
        let hx = 0.25 * (k.ax * d[0] * d[0] + k.bx * d[1] * d[1]) / l;
        let hy = 0.25 * (k.ay * d[0] * d[0] + k.by * d[1] * d[1]) / l;
        let lx = k.a * d[0] / l;
        let ly = k.b * d[1] / l;
        let j = (i + 1) % n;
        grad[j][0] += lx + hx;
        grad[j][1] += ly + hy;
        grad[i][0] += -lx + hx;
        grad[i][1] += -ly + hy;
    }
    (0..n)
        .map(|i| {
            let v = c.vertex(i);
            let k = s.coeffs(v[0], v[1]);
            // tangential components only reflect the vertex spacing; pair the
            // covector with the unit normal to the chord through the neighbours
            let sh = c.shift();
            let a = match i {
                0 => {
                    let p = c.vertex(n - 1);
                    [p[0] - sh[0], p[1] - sh[1]]
                }
                _ => c.vertex(i - 1),
            };
            let b = c.vertex(i + 1);
            let d = [b[0] - a[0], b[1] - a[1]];
            let dn = (k.a * d[0] * d[0] + k.b * d[1] * d[1]).sqrt();
            let e = [-d[1] / dn * (k.b / k.a).sqrt(), d[0] / dn * (k.a / k.b).sqrt()];
            let gn = (grad[i][0] * e[0] + grad[i][1] * e[1]).abs();
            gn / (0.5 * (seg[i] + seg[(i + n - 1) % n]))
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShortenOptions {
    /// Vertices per unit of winding extent.
    pub vertices: usize,
    /// Stop once the relative length decrease over `window` iterations
    /// falls below this.
    pub rel_tol: f64,
    pub window: usize,
    pub max_iter: usize,
    /// Resample-and-restart rounds.
    pub rounds: usize,
    /// Geodesic residual accepted as converged.
    pub residual_tol: f64,
    /// Multistart seed count.
    pub starts: usize,
    pub seed: u64,
}

impl Default for ShortenOptions {
    fn default() -> Self {
        Self {
            vertices: 128,
            rel_tol: 1e-9,
            window: 100,
            max_iter: 20_000,
            rounds: 4,
            residual_tol: 1e-3,
            starts: 8,
            seed: 0x5eed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Shortened {
    pub curve: LoopPolyline,
    pub length: f64,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Birkhoff-style shortening of `c` toward a closed geodesic in its class.
pub fn shorten_loop(c: &LoopPolyline, s: &LoopSurface, opts: &ShortenOptions) -> Result<Shortened> {
    check_surface(c, s)?;
    let mut curve = c.resample(s, c.len())?;
    let mut length = loop_length(&curve, s);
    let start_len = loop_length(c, s);
    if start_len < length {
        // resampling moved off a better polyline
        curve = c.clone();
        length = start_len;
    }
    let shift = curve.shift();
    let mut iterations = 0;
    let mut converged = false;
    let lopts = LbfgsOptions {
        memory: 12,
        max_iter: opts.max_iter,
        // energy ≈ length², so halve-equivalent relative tolerance doubles
        rel_tol: 2.0 * opts.rel_tol,
        window: opts.window,
        grad_tol: 0.0,
    };
    for _ in 0..opts.rounds.max(1) {
        let x0: Vec<f64> = curve.vertices.iter().flatten().copied().collect();
        let out = lbfgs(x0, &lopts, |x| energy(x, shift, s), |_, _, _| {});
        iterations += out.iterations;
        let v: Vec<[f64; 2]> = out.x.chunks(2).map(|p| [p[0], p[1]]).collect();
        let next = match LoopPolyline::new(v, curve.winding, curve.periods) {
            Ok(n) => n.resample(s, curve.len())?,
            Err(_) => return Err(Error::InvalidLoop("curve collapsed during shortening".into())),
        };
        let next_len = loop_length(&next, s);
        let improved = length - next_len;
        if next_len <= length {
            curve = next;
            length = next_len;
        }
        if improved < opts.rel_tol * length {
            converged = true;
            break;
        }
    }
    let residual = geodesic_residual(&curve, s);
    Ok(Shortened {
        curve,
        length,
        residual,
        iterations,
        converged: converged && residual <= opts.residual_tol,
    })
}

/// Deterministic seeds: axis-aligned parallels, then randomized wiggles.
pub fn multistart_seeds(w: WindingClass, s: &LoopSurface, opts: &ShortenOptions) -> Result<Vec<LoopPolyline>> {
    if w.is_trivial() {
        return Err(Error::InvalidLoop("trivial winding class".into()));
    }
    if !w.matches(s) {
        return Err(Error::InvalidLoop("winding class does not match the surface".into()));
    }
    let per = s.periods();
    let [p, _] = w.vector();
    let n = (opts.vertices * w.extent()).max(MIN_VERTICES);
    let axis = opts.starts.min(4);
    let mut out = Vec::with_capacity(opts.starts);
    for j in 0..axis {
        let f = j as f64 / axis as f64;
        let origin = if p != 0 { [0.0, f * per[1]] } else { [f * per[0], 0.0] };
        out.push(LoopPolyline::straight(w, per, origin, n, |_| 0.0)?);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let amp = 0.1 * per[0].min(per[1]);
    for _ in axis..opts.starts {
        let origin = [rng.gen_range(0.0..per[0]), rng.gen_range(0.0..per[1])];
        let coef: Vec<(f64, f64)> = (1..=3)
            .map(|_| (rng.gen_range(-amp..amp), rng.gen_range(0.0..std::f64::consts::TAU)))
            .collect();
        let reps = w.extent().max(1) as f64;
        out.push(LoopPolyline::straight(w, per, origin, n, |t| {
            coef.iter()
                .enumerate()
                .map(|(m, (a, ph))| a * (std::f64::consts::TAU * (m + 1) as f64 * t * reps + ph).sin() / (m + 1) as f64)
                .sum()
        })?);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinLength {
    /// `min(shortened, oracle)`.
    pub length: f64,
    pub shortened: f64,
    pub oracle: Option<f64>,
    /// `|shortened − oracle| / oracle`.
    pub discrepancy: f64,
    /// Discrepancy above 5%.
    pub flagged: bool,
    pub best: Shortened,
    /// Shortened length from every seed.
    pub per_seed: Vec<f64>,
}

/// Oracle cross-check settings for [`min_length`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleOptions {
    pub copies: usize,
    pub refinement: usize,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self {
            copies: 1,
            refinement: 48,
        }
    }
}

/// Best shortened loop over `seeds`.
pub fn best_of(seeds: &[LoopPolyline], s: &LoopSurface, opts: &ShortenOptions) -> Result<(Shortened, Vec<f64>)> {
    let mut best: Option<Shortened> = None;
    let mut per_seed = Vec::with_capacity(seeds.len());
    for c in seeds {
        let r = shorten_loop(c, s, opts)?;
        per_seed.push(r.length);
        if best.as_ref().map_or(true, |b| r.length < b.length) {
            best = Some(r);
        }
    }
    let best = best.ok_or_else(|| Error::InvalidLoop("no seeds".into()))?;
    Ok((best, per_seed))
}

/// `ℓ_g(Γ)` from multistart shortening, cross-checked against the lattice
/// oracle when `oracle` is given.
pub fn min_length(
    w: WindingClass,
    s: &LoopSurface,
    opts: &ShortenOptions,
    oracle: Option<OracleOptions>,
) -> Result<MinLength> {
    let seeds = multistart_seeds(w, s, opts)?;
    let (best, per_seed) = best_of(&seeds, s, opts)?;
    let oracle_len = match oracle {
        Some(o) => Some(dijkstra_cover_oracle(w, s, o.copies, o.refinement)?.length),
        None => None,
    };
    let (length, discrepancy) = match oracle_len {
        Some(o) => (best.length.min(o), (best.length - o).abs() / o),
        None => (best.length, 0.0),
    };
    let flagged = discrepancy > 0.05;
    if flagged {
        log::warn!("shortening {} and oracle {:?} disagree by {discrepancy}", best.length, oracle_len);
    }
    Ok(MinLength {
        length,
        shortened: best.length,
        oracle: oracle_len,
        discrepancy,
        flagged,
        best,
        per_seed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StableNorm {
    /// `ℓ(kΓ)` for `k = 1..=k_max`.
    pub lengths: Vec<f64>,
    /// `ℓ(kΓ)/k`.
    pub values: Vec<f64>,
    /// Minimum of `values`.
    pub estimate: f64,
    pub loops: Vec<LoopPolyline>,
}

/// Stable norm estimate `min_{k ≤ k_max} ℓ(kΓ)/k`. Multiples are seeded with
/// iterates and concatenations of shorter multiples, which keeps the computed
/// sequence subadditive.
pub fn stable_norm(w: WindingClass, s: &LoopSurface, k_max: usize, opts: &ShortenOptions) -> Result<StableNorm> {
    if k_max < 4 {
        return Err(Error::InvalidLoop(format!("k_max must be at least 4, got {k_max}")));
    }
    let first = min_length(w, s, opts, None)?;
    stable_norm_from(first.best.curve, s, k_max, opts)
}

/// [`stable_norm`] starting from a known shortest loop for `k = 1`.
pub fn stable_norm_from(first: LoopPolyline, s: &LoopSurface, k_max: usize, opts: &ShortenOptions) -> Result<StableNorm> {
    if k_max < 4 {
        return Err(Error::InvalidLoop(format!("k_max must be at least 4, got {k_max}")));
    }
    let single = ShortenOptions { starts: 1, ..*opts };
    let mut loops = vec![first];
    let mut lengths = vec![loop_length(&loops[0], s)];
    for k in 2..=k_max {
        let mut best: Option<(LoopPolyline, f64)> = None;
        let mut consider = |c: LoopPolyline, l: f64| {
            if best.as_ref().map_or(true, |b| l < b.1) {
                best = Some((c, l));
            }
        };
        let it = loops[0].iterate(k)?;
        let r = shorten_loop(&it, s, &single)?;
        consider(r.curve, r.length);
        for j in 1..=k / 2 {
            let c = loops[j - 1].concat(&loops[k - j - 1])?;
            let l = loop_length(&c, s);
            consider(c, l);
        }
        let (c, l) = best.expect("at least one candidate");
        loops.push(c);
        lengths.push(l);
    }
    let values: Vec<f64> = lengths.iter().enumerate().map(|(i, l)| l / (i + 1) as f64).collect();
    let estimate = values.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(StableNorm {
        lengths,
        values,
        estimate,
        loops,
    })
}
