use serde::{Deserialize, Serialize};

use super::{d0, pointwise_norm, DecOperators, OneForm, Potential};
use crate::error::{Error, Result};
use crate::flow::{rk4, torus_admissible_dt, torus_rate, FlowSystem, FlowTrace, FormFields};
use crate::geom::{ConformalTorusMetric, Metric};

/// Step bound for `∂_t φ = Δ_d φ`: `h² / (2 max e^{−2u})`. The wide
/// stencil `D²` has spectral radius `1/h²` per direction, half that of the
/// compact Laplacian driving the metric.
pub fn form_admissible_dt(m: &ConformalTorusMetric) -> f64 {
    2.0 * torus_admissible_dt(m)
}

/// Metric, evolving form `φ`, fixed initial form `φ₀` and potential `F`,
/// advanced together so every RK stage sees the current metric:
///
/// ```text
/// ∂_t u = e^{−2u} Δ₀u,   ∂_t φ = Δ_d φ,   ∂_t F = ΔF − δφ₀
/// ```
#[derive(Debug, Clone)]
pub struct CoupledTorus {
    pub metric: ConformalTorusMetric,
    pub form: OneForm,
    pub phi0: OneForm,
    pub potential: Vec<f64>,
    /// When false the metric is held fixed.
    pub evolve_metric: bool,
}

impl CoupledTorus {
    pub fn new(metric: ConformalTorusMetric, phi0: OneForm) -> Result<Self> {
        if phi0.grid != *metric.grid() {
            return Err(Error::InvalidGrid("form and metric grids differ".into()));
        }
        let n = phi0.grid.len();
        Ok(Self {
            metric,
            form: phi0.clone(),
            phi0,
            potential: vec![0.0; n],
            evolve_metric: true,
        })
    }

    pub fn frozen_metric(mut self) -> Self {
        self.evolve_metric = false;
        self
    }
}

impl FlowSystem for CoupledTorus {
    fn pack(&self) -> Vec<f64> {
        let mut y = self.metric.u().to_vec();
        y.extend_from_slice(&self.form.p);
        y.extend_from_slice(&self.form.q);
        y.extend_from_slice(&self.potential);
        y
    }

    fn unpack(&self, y: Vec<f64>) -> Self {
        let n = self.phi0.grid.len();
        let grid = *self.metric.grid();
        Self {
            metric: ConformalTorusMetric::from_parts_unchecked(grid, y[..n].to_vec()),
            form: OneForm {
                grid,
                p: y[n..2 * n].to_vec(),
                q: y[2 * n..3 * n].to_vec(),
            },
            phi0: self.phi0.clone(),
            potential: y[3 * n..].to_vec(),
            evolve_metric: self.evolve_metric,
        }
    }

    fn rate(&self) -> Vec<f64> {
        let n = self.phi0.grid.len();
        let ops = DecOperators::new(&self.metric);
        let mut out = if self.evolve_metric {
            torus_rate(&self.metric)
        } else {
            vec![0.0; n]
        };
        let lap = ops.hodge_laplacian(&self.form);
        out.extend(lap.p);
        out.extend(lap.q);
        // ∂_t F = ΔF − δφ₀ = −δ(φ₀ + dF)
        let total = self.phi0.add(&ops.d0(&self.potential));
        out.extend(ops.codifferential(&total).into_iter().map(|v| -v));
        out
    }

    fn admissible_dt(&self) -> f64 {
        if self.evolve_metric {
            torus_admissible_dt(&self.metric)
        } else {
            form_admissible_dt(&self.metric)
        }
    }

    fn metric(&self) -> Metric {
        Metric::Torus(self.metric.clone())
    }

    fn carried(&self) -> Option<FormFields> {
        Some(FormFields {
            components: vec![self.form.p.clone(), self.form.q.clone()],
            potential: self.potential.clone(),
        })
    }
}

/// One RK4 step of `∂_t φ = Δ_d φ` on a fixed metric.
pub fn step_form_heat(phi: &OneForm, m: &ConformalTorusMetric, dt: f64) -> Result<OneForm> {
    let admissible = form_admissible_dt(m);
    if !(dt > 0.0) || dt > admissible {
        return Err(Error::StepRejected {
            requested: dt,
            admissible,
        });
    }
    let mut state = CoupledTorus::new(m.clone(), phi.clone())?.frozen_metric();
    state.form = phi.clone();
    Ok(rk4(&state, dt).form)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialTrack {
    pub times: Vec<f64>,
    pub potentials: Vec<Potential>,
    /// `sup |φ(t) − φ₀ − dF(t)|_g` per snapshot.
    pub residuals: Vec<f64>,
    /// Largest `residual / t` over `t > 0`.
    pub residual_rate: f64,
}

/// Reads the co-evolved potential out of a coupled trace and checks
/// `φ(t) = φ₀ + dF(t)` against the independently evolved form.
pub fn potential_track(trace: &FlowTrace) -> Result<PotentialTrack> {
    let first = trace
        .initial()
        .form
        .as_ref()
        .ok_or_else(|| Error::NotApplicable("trace carries no form data".into()))?;
    let mut out = PotentialTrack {
        times: Vec::new(),
        potentials: Vec::new(),
        residuals: Vec::new(),
        residual_rate: 0.0,
    };
    for s in &trace.snapshots {
        let fields = s
            .form
            .as_ref()
            .ok_or_else(|| Error::NotApplicable(format!("snapshot at t = {} has no form", s.t)))?;
        let residual = match &s.metric {
            Metric::Torus(m) => {
                let g = *m.grid();
                let phi = OneForm {
                    grid: g,
                    p: fields.components[0].clone(),
                    q: fields.components[1].clone(),
                };
                let phi0 = OneForm {
                    grid: g,
                    p: first.components[0].clone(),
                    q: first.components[1].clone(),
                };
                let diff = phi.axpy(-1.0, &phi0).axpy(-1.0, &d0(&g, &fields.potential));
                pointwise_norm(&diff, m).into_iter().fold(0.0, f64::max)
            }
            Metric::Warped(m) => {
                let df = m.grid().d(&fields.potential);
                (0..m.grid().n)
                    .map(|i| (fields.components[0][i] - first.components[0][i] - df[i]).abs() / m.phi()[i])
                    .fold(0.0, f64::max)
            }
        };
        if s.t > 0.0 {
            out.residual_rate = out.residual_rate.max(residual / s.t);
        }
        out.times.push(s.t);
        out.potentials.push(Potential::new(fields.potential.clone()));
        out.residuals.push(residual);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::PeriodicGrid2;

    #[test]
    fn harmonic_form_is_stationary() {
        let g = PeriodicGrid2::square(16).unwrap();
        let m = ConformalTorusMetric::flat(g);
        let phi = OneForm::constant(g, 0.4, -1.1);
        let next = step_form_heat(&phi, &m, 0.5 * form_admissible_dt(&m)).unwrap();
        assert_eq!(next, phi);
    }

    #[test]
    fn rejects_oversized_step() {
        let g = PeriodicGrid2::square(64).unwrap();
        let m = ConformalTorusMetric::flat(g);
        let phi = OneForm::constant(g, 1.0, 0.0);
        assert!(matches!(step_form_heat(&phi, &m, 1.0), Err(Error::StepRejected { .. })));
    }
}
