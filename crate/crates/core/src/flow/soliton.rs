use serde::{Deserialize, Serialize};

use super::{FlowTrace, Termination};
use crate::error::{Error, Result};
use crate::geom::WarpedMetric;
use crate::grid::PeriodicGrid1;

/// Slope convention for the shrinking round cylinder `S¹ × S^{n-1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolitonVariant {
    /// `ψ² = ψ₀² − 2(n−2)t`: what `∂_t g = −2Rc` gives for the unit round sphere factor.
    Derived,
    /// `ψ² = 2(n−1)(T̄ − t)`: the rate of a round `n`-sphere, kept for comparison.
    Alternate,
}

impl SolitonVariant {
    /// Rate of decrease of `ψ²`.
    pub fn slope(self, n: usize) -> f64 {
        match self {
            Self::Derived => 2.0 * (n - 2) as f64,
            Self::Alternate => 2.0 * (n - 1) as f64,
        }
    }

    pub fn vanishing_time(self, n: usize, psi0: f64) -> f64 {
        psi0 * psi0 / self.slope(n)
    }
}

/// Round cylinder `dx² + ψ(t)² g_can` at time `t`.
pub fn cylinder_soliton(
    n: usize,
    grid: PeriodicGrid1,
    psi0: f64,
    t: f64,
    variant: SolitonVariant,
) -> Result<WarpedMetric> {
    if n < 3 {
        return Err(Error::InvalidGrid(format!("need n >= 3, got {n}")));
    }
    if !(psi0.is_finite() && psi0 > 0.0) {
        return Err(Error::NonPositive {
            field: "psi0",
            index: 0,
            value: psi0,
        });
    }
    let vanishing = variant.vanishing_time(n, psi0);
    if t >= vanishing {
        return Err(Error::PastVanishingTime { t, vanishing });
    }
    let psi = (psi0 * psi0 - variant.slope(n) * t).sqrt();
    WarpedMetric::from_fn(n, grid, |_| 1.0, |_| psi)
}

/// Parabolic rescaling `g_j(τ) = λ g(t_j + τ/λ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DilationSpec {
    pub lambda: f64,
    pub t_j: f64,
    /// Base node of the pointed rescaling.
    #[serde(default)]
    pub x_j: usize,
    /// Requested window in rescaled time; the full achievable window if absent.
    #[serde(default)]
    pub window: Option<[f64; 2]>,
}

impl DilationSpec {
    pub fn new(lambda: f64, t_j: f64) -> Self {
        Self {
            lambda,
            t_j,
            x_j: 0,
            window: None,
        }
    }
}

fn nearest_time(times: &[f64], t: f64) -> f64 {
    times
        .iter()
        .copied()
        .min_by(|a, b| (a - t).abs().total_cmp(&(b - t).abs()))
        .unwrap_or(f64::NAN)
}

/// Rescales a trace; diagnostics are recomputed from the scaled snapshots.
pub fn dilate(trace: &FlowTrace, spec: &DilationSpec) -> Result<FlowTrace> {
    let lambda = spec.lambda;
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::Config(format!("dilation factor must be positive, got {lambda}")));
    }
    let times = trace.times();
    let nearest = nearest_time(&times, spec.t_j);
    if (nearest - spec.t_j).abs() > 1e-9 * spec.t_j.abs().max(1.0) {
        return Err(Error::DilationBase {
            t_j: spec.t_j,
            nearest,
        });
    }
    let t_j = nearest;
    let nodes = match &trace.initial().metric {
        crate::geom::Metric::Torus(m) => m.grid().len(),
        crate::geom::Metric::Warped(m) => m.grid().n,
    };
    if spec.x_j >= nodes {
        return Err(Error::Config(format!("base node {} outside 0..{nodes}", spec.x_j)));
    }
    let lo = lambda * (times[0] - t_j);
    let hi = lambda * (times[times.len() - 1] - t_j);
    let [wlo, whi] = spec.window.unwrap_or([lo, hi]);
    let eps = 1e-12 * (lo.abs() + hi.abs()).max(1.0);
    if wlo < lo - eps || whi > hi + eps || wlo > whi {
        return Err(Error::DilationWindow {
            requested_lo: wlo,
            requested_hi: whi,
            achievable_lo: lo,
            achievable_hi: hi,
        });
    }
    let snapshots: Vec<_> = trace
        .snapshots
        .iter()
        .filter_map(|s| {
            let tau = if s.t == t_j { 0.0 } else { lambda * (s.t - t_j) };
            (tau >= wlo - eps && tau <= whi + eps).then(|| {
                let mut out = s.clone();
                out.t = tau;
                out.metric = s.metric.scaled(lambda);
                out
            })
        })
        .collect();
    let termination = match trace.termination {
        Termination::Completed => Termination::Completed,
        Termination::SingularityImminent { t, radius } => Termination::SingularityImminent {
            t: lambda * (t - t_j),
            radius: radius * lambda.sqrt(),
        },
    };
    let mut config = trace.config.clone();
    config.dt_init *= lambda;
    config.t_end = lambda * (config.t_end - t_j);
    config.singularity_floor = config.singularity_floor.map(|f| f * lambda.sqrt());
    Ok(FlowTrace::from_snapshots(
        config,
        snapshots,
        termination,
        lambda * (trace.t_num - t_j),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    fn g() -> PeriodicGrid1 {
        PeriodicGrid1::new(16, TAU).unwrap()
    }

    #[test]
    fn derived_and_alternate_variants() {
        let m = cylinder_soliton(3, g(), 1.0, 0.0, SolitonVariant::Derived).unwrap();
        assert!(m.phi().iter().chain(m.psi()).all(|&v| v == 1.0));
        let m = cylinder_soliton(3, g(), 1.0, 0.25, SolitonVariant::Derived).unwrap();
        assert!((m.psi()[0].powi(2) - 0.5).abs() < 1e-15);
        // ψ₀² = 2(n−1)T̄ with T̄ = 1/4
        let psi0 = (2.0 * 2.0 * 0.25_f64).sqrt();
        let m = cylinder_soliton(3, g(), psi0, 0.0, SolitonVariant::Alternate).unwrap();
        assert!((m.psi()[0].powi(2) - 1.0).abs() < 1e-15);
        assert!((SolitonVariant::Alternate.vanishing_time(3, psi0) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn rejects_times_past_vanishing() {
        let e = cylinder_soliton(3, g(), 1.0, 0.5, SolitonVariant::Derived).unwrap_err();
        assert_eq!(e, Error::PastVanishingTime { t: 0.5, vanishing: 0.5 });
    }
}
