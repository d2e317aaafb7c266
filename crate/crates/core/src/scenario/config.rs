//! Scenario files: one TOML document per run.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::expr::FieldExpr;
use crate::error::{Error, Result};
use crate::flow::FlowConfig;
use crate::geom::{ConformalTorusMetric, WarpedMetric};
use crate::grid::{PeriodicGrid1, PeriodicGrid2};
use crate::hodge::{CohomologyClass, OneForm};
use crate::loops::{ShortenOptions, WindingClass};
use crate::monitor::{MonitorOptions, Slacks};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Torus,
    Warped,
}

fn tau() -> f64 {
    std::f64::consts::TAU
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    /// Nodes per direction on the torus, along the circle for a warped product.
    pub n: usize,
    #[serde(default = "tau")]
    pub period: f64,
    /// Total dimension `n` of `S¹ × S^{n−1}`; warped only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
}

/// Random Fourier perturbation of the metric function; needs a top-level seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomSpec {
    pub modes: usize,
    pub amplitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSpec {
    /// Conformal factor `u(x, y)` of `e^{2u}(dx² + dy²)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u: Option<String>,
    /// Warping functions of `φ(x)² dx² + ψ(x)² g_can`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub psi: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub random: Option<RandomSpec>,
}

/// Closed 1-form `Φ`: harmonic part with the given periods plus `dF`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FormSpec {
    pub periods: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exact: Option<String>,
}

fn d_k_max() -> usize {
    8
}
fn d_vertices() -> usize {
    128
}
fn d_starts() -> usize {
    8
}
fn d_one() -> usize {
    1
}
fn d_potential() -> f64 {
    5e-3
}
fn d_rmin() -> f64 {
    1e-3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonitorSpec {
    #[serde(default = "d_k_max")]
    pub k_max: usize,
    /// Loop vertices per unit winding.
    #[serde(default = "d_vertices")]
    pub vertices: usize,
    #[serde(default = "d_starts")]
    pub starts: usize,
    #[serde(default = "d_one")]
    pub comass_stride: usize,
    /// Allowed `sup|φ − φ₀ − dF| / t`.
    #[serde(default = "d_potential")]
    pub potential_rate: f64,
    /// Relative slack of the scalar-curvature comparison.
    #[serde(default = "d_rmin")]
    pub rmin_slack: f64,
    #[serde(default)]
    pub slacks: Slacks,
}

impl Default for MonitorSpec {
    fn default() -> Self {
        Self {
            k_max: d_k_max(),
            vertices: d_vertices(),
            starts: d_starts(),
            comass_stride: d_one(),
            potential_rate: d_potential(),
            rmin_slack: d_rmin(),
            slacks: Slacks::default(),
        }
    }
}

fn d_tolerance() -> f64 {
    2e-2
}

/// Base times as fractions of `T_num`, snapped to the nearest snapshot, with
/// `λ_j = 1 / (T_num − t_j)` unless given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DilationLadder {
    pub fractions: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<Vec<f64>>,
    #[serde(default = "d_tolerance")]
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub family: Family,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Winding class `α`: `[p, q]` on the torus, `[k]` on a warped product.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<Vec<i64>>,
    pub grid: GridSpec,
    pub initial: InitialSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub form: Option<FormSpec>,
    pub flow: FlowConfig,
    #[serde(default)]
    pub monitor: MonitorSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dilation: Option<DilationLadder>,
}

/// Prefixes `msg` with the line of the first `key = ...` or `[key]` in `text`.
fn anchored(text: Option<&str>, key: &str, msg: String) -> Error {
    let leaf = key.rsplit('.').next().unwrap_or(key);
    let line = text.and_then(|t| {
        t.lines().position(|l| {
            let l = l.trim_start();
            l.strip_prefix(leaf).is_some_and(|r| r.trim_start().starts_with('='))
                || l.trim_end() == format!("[{key}]")
        })
    });
    match line {
        Some(i) => Error::Config(format!("line {}: {key}: {msg}", i + 1)),
        None => Error::Config(format!("{key}: {msg}")),
    }
}

impl ScenarioConfig {
    /// Parses and validates; errors carry the offending line where known.
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string().trim_end().to_string()))?;
        cfg.check(Some(text))?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Serialization(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.check(None)
    }

    fn check(&self, text: Option<&str>) -> Result<()> {
        let bad = |key: &str, msg: String| Err(anchored(text, key, msg));
        if self.name.trim().is_empty() {
            return bad("name", "must not be empty".into());
        }
        if self.grid.n < 8 {
            return bad("grid.n", format!("need at least 8 nodes, got {}", self.grid.n));
        }
        if !(self.grid.period.is_finite() && self.grid.period > 0.0) {
            return bad("grid.period", format!("must be positive, got {}", self.grid.period));
        }
        let i = &self.initial;
        let (rank, vars) = match self.family {
            Family::Torus => {
                if i.u.is_none() {
                    return bad("initial.u", "torus scenarios need a conformal factor `u`".into());
                }
                if i.phi.is_some() || i.psi.is_some() || self.grid.dim.is_some() {
                    return bad("initial", "`phi`, `psi` and `grid.dim` belong to warped scenarios".into());
                }
                (2, &["x", "y"][..])
            }
            Family::Warped => {
                if i.psi.is_none() {
                    return bad("initial.psi", "warped scenarios need a sphere radius `psi`".into());
                }
                if i.u.is_some() {
                    return bad("initial.u", "`u` belongs to torus scenarios".into());
                }
                match self.grid.dim {
                    Some(d) if d >= 3 => {}
                    d => return bad("grid.dim", format!("warped scenarios need dim >= 3, got {d:?}")),
                }
                (1, &["x"][..])
            }
        };
        for (key, e) in [("initial.u", &i.u), ("initial.phi", &i.phi), ("initial.psi", &i.psi)] {
            if let Some(src) = e {
                FieldExpr::parse(src, vars).map_err(|e| anchored(text, key, e.to_string()))?;
            }
        }
        if let Some(r) = &i.random {
            if self.seed.is_none() {
                return bad("initial.random", "randomized fields need a top-level `seed`".into());
            }
            if r.modes == 0 || !(r.amplitude.is_finite() && r.amplitude >= 0.0) {
                return bad("initial.random", "need modes >= 1 and a finite amplitude >= 0".into());
            }
        }
        if let Some(f) = &self.form {
            if f.periods.len() != rank || f.periods.iter().any(|p| !p.is_finite()) {
                return bad("form.periods", format!("need {rank} finite periods, got {:?}", f.periods));
            }
            if let Some(src) = &f.exact {
                FieldExpr::parse(src, vars).map_err(|e| anchored(text, "form.exact", e.to_string()))?;
            }
        }
        if let Some(a) = &self.alpha {
            if a.len() != rank {
                return bad("alpha", format!("need {rank} winding numbers, got {a:?}"));
            }
            if a.iter().all(|k| *k == 0) {
                return bad("alpha", "the class must be nonzero".into());
            }
        }
        self.flow.validate().map_err(|e| anchored(text, "flow", e.to_string()))?;
        let m = &self.monitor;
        if m.vertices < 16 || m.starts == 0 {
            return bad("monitor", format!("need vertices >= 16 and starts >= 1, got {} and {}", m.vertices, m.starts));
        }
        if m.k_max != 0 && m.k_max < 4 {
            return bad("monitor.k_max", format!("use 0 to skip or at least 4, got {}", m.k_max));
        }
        if let Some(d) = &self.dilation {
            if d.fractions.is_empty() || d.fractions.iter().any(|f| !(*f >= 0.0 && *f < 1.0)) {
                return bad("dilation.fractions", format!("need values in [0, 1), got {:?}", d.fractions));
            }
            if let Some(l) = &d.lambda {
                if l.len() != d.fractions.len() || l.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
                    return bad("dilation.lambda", "need one positive value per fraction".into());
                }
            }
            if self.alpha.is_none() {
                return bad("dilation", "the ladder needs a class `alpha`".into());
            }
        }
        Ok(())
    }

    pub fn winding(&self) -> Option<WindingClass> {
        let a = self.alpha.as_ref()?;
        Some(match self.family {
            Family::Torus => WindingClass::Torus { p: a[0], q: a[1] },
            Family::Warped => WindingClass::Warped { k: a[0] },
        })
    }

    fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed.unwrap_or(0))
    }

    fn sample2(&self, g: &PeriodicGrid2, src: &str) -> Result<Vec<f64>> {
        let e = FieldExpr::parse(src, &["x", "y"])?;
        let mut s = e.sampler()?;
        let mut out = Vec::with_capacity(g.len());
        for j in 0..g.ny {
            for i in 0..g.nx {
                out.push(s.eval(&[g.x(i), g.y(j)])?);
            }
        }
        Ok(out)
    }

    fn sample1(&self, g: &PeriodicGrid1, src: &str) -> Result<Vec<f64>> {
        let e = FieldExpr::parse(src, &["x"])?;
        let mut s = e.sampler()?;
        (0..g.n).map(|i| s.eval(&[g.x(i)])).collect()
    }

    pub fn torus_grid(&self) -> Result<PeriodicGrid2> {
        PeriodicGrid2::new(self.grid.n, self.grid.n, self.grid.period, self.grid.period)
    }

    pub fn warped_grid(&self) -> Result<PeriodicGrid1> {
        PeriodicGrid1::new(self.grid.n, self.grid.period)
    }

    /// Initial torus metric and form.
    pub fn build_torus(&self) -> Result<(ConformalTorusMetric, Option<OneForm>)> {
        let g = self.torus_grid()?;
        let mut u = self.sample2(&g, self.initial.u.as_deref().unwrap_or("0"))?;
        if let Some(r) = &self.initial.random {
            let k = std::f64::consts::TAU / self.grid.period;
            let mut rng = self.rng();
            let m = r.modes as i64;
            for a in -m..=m {
                for b in 0..=m {
                    if b == 0 && a <= 0 {
                        continue;
                    }
                    let c = rng.gen_range(-r.amplitude..=r.amplitude) / (a * a + b * b) as f64;
                    let th = rng.gen_range(0.0..std::f64::consts::TAU);
                    for j in 0..g.ny {
                        for i in 0..g.nx {
                            u[j * g.nx + i] += c * (k * (a as f64 * g.x(i) + b as f64 * g.y(j)) + th).cos();
                        }
                    }
                }
            }
        }
        let metric = ConformalTorusMetric::new(g, u)?;
        let form = match &self.form {
            None => None,
            Some(f) => {
                let cls = CohomologyClass::from_periods(g, [f.periods[0], f.periods[1]]);
                let cls = match &f.exact {
                    Some(src) => cls.with_exact(&self.sample2(&g, src)?),
                    None => cls,
                };
                Some(cls.base)
            }
        };
        Ok((metric, form))
    }

    /// Initial warped metric and radial form coefficient.
    pub fn build_warped(&self) -> Result<(WarpedMetric, Option<Vec<f64>>)> {
        let g = self.warped_grid()?;
        let phi = self.sample1(&g, self.initial.phi.as_deref().unwrap_or("1"))?;
        let mut psi = self.sample1(&g, self.initial.psi.as_deref().unwrap_or("1"))?;
        if let Some(r) = &self.initial.random {
            let k = std::f64::consts::TAU / self.grid.period;
            let mut rng = self.rng();
            for a in 1..=r.modes {
                let c = rng.gen_range(-r.amplitude..=r.amplitude) / (a * a) as f64;
                let th = rng.gen_range(0.0..std::f64::consts::TAU);
                for (i, p) in psi.iter_mut().enumerate() {
                    *p *= (c * (k * a as f64 * g.x(i) + th).cos()).exp();
                }
            }
        }
        let metric = WarpedMetric::new(self.grid.dim.unwrap_or(3), g, phi, psi)?;
        let form = match &self.form {
            None => None,
            Some(f) => {
                let mut v = vec![f.periods[0] / self.grid.period; g.n];
                if let Some(src) = &f.exact {
                    let df = g.d(&self.sample1(&g, src)?);
                    v.iter_mut().zip(df).for_each(|(v, d)| *v += d);
                }
                Some(v)
            }
        };
        Ok((metric, form))
    }

    pub fn monitor_options(&self) -> MonitorOptions {
        let m = &self.monitor;
        // near a neck the warping function varies on the grid scale, so
        // loops get at least one vertex per node to resolve it
        let vertices = match self.family {
            Family::Warped => m.vertices.max(self.grid.n),
            Family::Torus => m.vertices,
        };
        MonitorOptions {
            shorten: ShortenOptions {
                vertices,
                starts: m.starts,
                seed: self.seed.unwrap_or(ShortenOptions::default().seed),
                ..ShortenOptions::default()
            },
            k_max: m.k_max,
            comass_stride: m.comass_stride,
            phi_periods: self.form.as_ref().map(|f| f.periods.clone()),
            ..MonitorOptions::default()
        }
    }
}
