//! Ricci flow integrators for both model families.
//!
//! The torus ansatz reduces to `∂_t u = e^{-2u} Δ₀u = -K`; the warped
//! ansatz to `∂_t φ = -ric_s φ`, `∂_t ψ = -ric_sph ψ` with the unit-frame
//! Ricci components of [`crate::geom`]. Both are advanced with classical
//! explicit RK4 under a CFL-type step bound.

mod checks;
mod soliton;
mod trace;

pub use checks::{blowup_rate_check, rmin_comparison_check, BlowupReport, ComparisonReport, Violation};
pub use soliton::{cylinder_soliton, dilate, DilationSpec, SolitonVariant};
pub use trace::{DiagnosticRow, FlowTrace, FormFields, Snapshot, Termination, DIAGNOSTIC_COLUMNS};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{arclength_derivatives, ConformalTorusMetric, Metric, WarpedMetric};

/// Ratio of the default singularity floor to the initial minimal radius.
pub const DEFAULT_FLOOR_RATIO: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowConfig {
    /// Upper bound on the step; the integrator never exceeds it.
    pub dt_init: f64,
    #[serde(default = "default_safety")]
    pub cfl_safety: f64,
    pub t_end: f64,
    #[serde(default = "default_stride")]
    pub snapshot_stride: usize,
    /// Radius below which a warped run stops; `None` means
    /// [`DEFAULT_FLOOR_RATIO`] times the initial minimal radius.
    #[serde(default)]
    pub singularity_floor: Option<f64>,
}

fn default_safety() -> f64 {
    0.5
}

fn default_stride() -> usize {
    100
}

impl FlowConfig {
    pub fn new(dt_init: f64, t_end: f64) -> Self {
        Self {
            dt_init,
            cfl_safety: default_safety(),
            t_end,
            snapshot_stride: default_stride(),
            singularity_floor: None,
        }
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.snapshot_stride = stride;
        self
    }

    pub fn with_safety(mut self, s: f64) -> Self {
        self.cfl_safety = s;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |v: f64| v.is_finite() && v > 0.0;
        if !pos(self.dt_init) || !pos(self.t_end) {
            return Err(Error::Config(format!(
                "dt_init and t_end must be positive, got {} and {}",
                self.dt_init, self.t_end
            )));
        }
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            return Err(Error::Config(format!(
                "cfl_safety must lie in (0, 1], got {}",
                self.cfl_safety
            )));
        }
        if self.snapshot_stride == 0 {
            return Err(Error::Config("snapshot_stride must be positive".into()));
        }
        if let Some(f) = self.singularity_floor {
            if !pos(f) {
                return Err(Error::Config(format!("singularity_floor must be positive, got {f}")));
            }
        }
        Ok(())
    }
}

/// A state advanced by explicit RK4: a packed vector plus its time derivative.
pub trait FlowSystem: Clone {
    fn pack(&self) -> Vec<f64>;
    /// Rebuilds a state of the same shape; intermediate RK stages skip validation.
    fn unpack(&self, y: Vec<f64>) -> Self;
    fn rate(&self) -> Vec<f64>;
    /// Largest stable step at unit safety.
    fn admissible_dt(&self) -> f64;
    fn metric(&self) -> Metric;
    /// Smallest warped radius, if the family has one.
    fn radius_min(&self) -> Option<f64> {
        None
    }
    /// Co-evolved form data recorded into snapshots.
    fn carried(&self) -> Option<FormFields> {
        None
    }
}

fn axpy(y: &[f64], a: f64, k: &[f64]) -> Vec<f64> {
    y.iter().zip(k).map(|(y, k)| y + a * k).collect()
}

/// One classical RK4 step without any step-size check.
pub fn rk4<S: FlowSystem>(s: &S, dt: f64) -> S {
    let y = s.pack();
    let k1 = s.rate();
    let k2 = s.unpack(axpy(&y, 0.5 * dt, &k1)).rate();
    let k3 = s.unpack(axpy(&y, 0.5 * dt, &k2)).rate();
    let k4 = s.unpack(axpy(&y, dt, &k3)).rate();
    let next: Vec<f64> = (0..y.len())
        .map(|i| y[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect();
    s.unpack(next)
}

fn checked_step<S: FlowSystem>(s: &S, dt: f64) -> Result<S> {
    let admissible = s.admissible_dt();
    if !(dt > 0.0) || dt > admissible {
        return Err(Error::StepRejected {
            requested: dt,
            admissible,
        });
    }
    let next = rk4(s, dt);
    if let Some(index) = next.pack().iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { field: "state", index });
    }
    Ok(next)
}

impl FlowSystem for ConformalTorusMetric {
    fn pack(&self) -> Vec<f64> {
        self.u().to_vec()
    }

    fn unpack(&self, y: Vec<f64>) -> Self {
        ConformalTorusMetric::from_parts_unchecked(*self.grid(), y)
    }

    fn rate(&self) -> Vec<f64> {
        torus_rate(self)
    }

    fn admissible_dt(&self) -> f64 {
        torus_admissible_dt(self)
    }

    fn metric(&self) -> Metric {
        Metric::Torus(self.clone())
    }
}

/// `∂_t u = e^{-2u} Δ₀u`.
pub fn torus_rate(m: &ConformalTorusMetric) -> Vec<f64> {
    let mut lap = m.grid().laplacian(m.u());
    for (l, u) in lap.iter_mut().zip(m.u()) {
        *l *= (-2.0 * u).exp();
    }
    lap
}

/// `h² / (4 max e^{-2u})`.
pub fn torus_admissible_dt(m: &ConformalTorusMetric) -> f64 {
    let h = m.grid().h_min();
    let umin = m.u().iter().copied().fold(f64::INFINITY, f64::min);
    h * h / (4.0 * (-2.0 * umin).exp())
}

/// One RK4 step of the torus flow; rejects steps above the stability bound.
pub fn step_torus_flow(m: &ConformalTorusMetric, dt: f64) -> Result<ConformalTorusMetric> {
    checked_step(m, dt)
}

impl FlowSystem for WarpedMetric {
    fn pack(&self) -> Vec<f64> {
        let mut y = self.phi().to_vec();
        y.extend_from_slice(self.psi());
        y
    }

    fn unpack(&self, mut y: Vec<f64>) -> Self {
        let psi = y.split_off(self.grid().n);
        WarpedMetric::from_parts_unchecked(self.n(), *self.grid(), y, psi)
    }

    fn rate(&self) -> Vec<f64> {
        let (a, b) = warped_rate(self);
        let mut out = a;
        out.extend(b);
        out
    }

    fn admissible_dt(&self) -> f64 {
        warped_admissible_dt(self)
    }

    fn metric(&self) -> Metric {
        Metric::Warped(self.clone())
    }

    fn radius_min(&self) -> Option<f64> {
        Some(self.psi_min())
    }
}

/// `(∂_t φ, ∂_t ψ) = (-ric_s φ, -ric_sph ψ)`.
pub fn warped_rate(m: &WarpedMetric) -> (Vec<f64>, Vec<f64>) {
    let (ds, dss) = arclength_derivatives(m.grid(), m.phi(), m.psi());
    let nm1 = (m.n() - 1) as f64;
    let nm2 = (m.n() - 2) as f64;
    let mut dphi = Vec::with_capacity(ds.len());
    let mut dpsi = Vec::with_capacity(ds.len());
    for i in 0..ds.len() {
        let (phi, psi) = (m.phi()[i], m.psi()[i]);
        dphi.push(nm1 * dss[i] / psi * phi);
        dpsi.push(dss[i] - nm2 * (1.0 - ds[i] * ds[i]) / psi);
    }
    (dphi, dpsi)
}

/// Diffusive bound `(h φ_min)² / 2` combined with the reaction bound
/// `1 / (2(n-1) sup|sec|)`.
pub fn warped_admissible_dt(m: &WarpedMetric) -> f64 {
    let h = m.grid().h();
    let phi_min = m.phi().iter().copied().fold(f64::INFINITY, f64::min);
    let diffusive = 0.5 * (h * phi_min).powi(2);
    let c = crate::geom::warped_curvature(m);
    let reaction = if c.sup_rm > 0.0 {
        1.0 / (2.0 * (m.n() - 1) as f64 * c.sup_rm)
    } else {
        f64::INFINITY
    };
    diffusive.min(reaction)
}

pub fn step_warped_flow(m: &WarpedMetric, dt: f64) -> Result<WarpedMetric> {
    checked_step(m, dt)
}

/// Extrapolated vanishing time of `r(t) = ψ_min²` from the last three
/// samples: root of the interpolating quadratic nearest past the last sample,
/// falling back to the secant through the last two.
pub fn extrapolate_vanishing_time(samples: &[(f64, f64)]) -> Option<f64> {
    let n = samples.len();
    if n < 2 {
        return None;
    }
    let (t1, r1) = samples[n - 2];
    let (t2, r2) = samples[n - 1];
    let secant = if r2 < r1 {
        Some(t2 + r2 * (t2 - t1) / (r1 - r2))
    } else {
        None
    };
    if n < 3 {
        return secant;
    }
    let (t0, r0) = samples[n - 3];
    // Newton form around t2.
    let d1 = (r2 - r1) / (t2 - t1);
    let d0 = (r1 - r0) / (t1 - t0);
    let c2 = (d1 - d0) / (t2 - t0);
    let b = d1 + c2 * (t2 - t1);
    // r(t2 + s) = r2 + b s + c2 s²
    let root = if c2.abs() < 1e-14 * b.abs().max(1e-300) {
        if b < 0.0 {
            Some(-r2 / b)
        } else {
            None
        }
    } else {
        let disc = b * b - 4.0 * c2 * r2;
        if disc < 0.0 {
            None
        } else {
            let sq = disc.sqrt();
            [(-b - sq) / (2.0 * c2), (-b + sq) / (2.0 * c2)]
                .into_iter()
                .filter(|s| *s >= 0.0)
                .fold(None, |acc: Option<f64>, s| Some(acc.map_or(s, |a| a.min(s))))
        }
    };
    root.map(|s| t2 + s).or(secant)
}

/// Integrates `initial` until `cfg.t_end` or until the warped radius falls
/// below the singularity floor.
pub fn run_flow<S: FlowSystem>(initial: &S, cfg: &FlowConfig) -> Result<FlowTrace> {
    run_flow_observed(initial, cfg, |_, _| {})
}

/// [`run_flow`] with a callback after every accepted step.
pub fn run_flow_observed<S: FlowSystem>(
    initial: &S,
    cfg: &FlowConfig,
    mut observe: impl FnMut(f64, &S),
) -> Result<FlowTrace> {
    cfg.validate()?;
    if let Some(index) = initial.pack().iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { field: "state", index });
    }
    let floor = initial
        .radius_min()
        .map(|r| cfg.singularity_floor.unwrap_or(DEFAULT_FLOOR_RATIO * r));
    let mut trace = FlowTrace::new(cfg.clone());
    let mut state = initial.clone();
    let mut t = 0.0;
    let mut steps = 0usize;
    let mut radius_history: Vec<(f64, f64)> = Vec::new();
    if let Some(r) = state.radius_min() {
        radius_history.push((t, r * r));
    }
    trace.push(t, &state);
    let termination = loop {
        if t >= cfg.t_end {
            break Termination::Completed;
        }
        let remaining = cfg.t_end - t;
        let mut dt = cfg.dt_init.min(cfg.cfl_safety * state.admissible_dt());
        let last = dt >= remaining;
        if last {
            dt = remaining;
        }
        state = checked_step(&state, dt)?;
        t = if last { cfg.t_end } else { t + dt };
        steps += 1;
        trace.note_step(dt);
        observe(t, &state);
        if let Some(r) = state.radius_min() {
            radius_history.push((t, r * r));
            if radius_history.len() > 8 {
                radius_history.remove(0);
            }
            if r < floor.expect("radius implies floor") {
                trace.push(t, &state);
                log::info!("singularity imminent at t = {t}: radius {r}");
                break Termination::SingularityImminent { t, radius: r };
            }
        }
        if steps % cfg.snapshot_stride == 0 || t >= cfg.t_end {
            trace.push(t, &state);
        }
    };
    trace.t_num = match termination {
        Termination::Completed => cfg.t_end,
        Termination::SingularityImminent { t, .. } => extrapolate_vanishing_time(&radius_history)
            .filter(|v| v.is_finite() && *v >= t)
            .unwrap_or(t),
    };
    trace.termination = termination;
    trace.steps = steps;
    Ok(trace)
}
