//! Per-snapshot series that feed the monotone reports.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::FlowTrace;
use crate::geom::Metric;
use crate::hodge::{
    comass_norm, period, radial_comass, radial_period, radial_sup_norm, sup_norm, CohomologyClass, ComassOptions,
    OneForm,
};
use crate::loops::{stable_norm_from, track_min_lengths, LengthSeries, LoopSurface, ShortenOptions, WindingClass};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonitorOptions {
    pub shorten: ShortenOptions,
    pub comass: ComassOptions,
    /// Largest multiple for the stable norm; 0 skips it.
    pub k_max: usize,
    /// Comass every `comass_stride` snapshots (first and last always); 0 skips it.
    pub comass_stride: usize,
    /// Periods of `Φ` when the trace carries no form.
    pub phi_periods: Option<Vec<f64>>,
}

impl Default for MonitorOptions {
    fn default() -> Self {
        Self {
            shorten: ShortenOptions::default(),
            comass: ComassOptions::default(),
            k_max: 8,
            comass_stride: 1,
            phi_periods: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComassSample {
    pub t: f64,
    pub value: f64,
    pub lower: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub times: Vec<f64>,
    pub sup_norms: Option<Vec<f64>>,
    pub comass: Vec<ComassSample>,
    pub lengths: LengthSeries,
    /// Stable norm estimate per snapshot (empty when skipped).
    pub stable_norm: Vec<f64>,
    /// `periods[k][i]`: `k`-th period of the carried form at snapshot `i`.
    pub periods: Vec<Vec<f64>>,
    /// Comass convergence logs as CSV, keyed by snapshot time.
    pub comass_logs: Vec<(f64, String)>,
}

impl Series {
    /// Periods of `Φ` at the first snapshot.
    pub fn initial_periods(&self) -> Vec<f64> {
        self.periods.iter().map(|p| p[0]).collect()
    }
}

fn torus_form(s: &crate::flow::Snapshot) -> Option<OneForm> {
    let (f, m) = (s.form.as_ref()?, s.metric.as_torus()?);
    OneForm::new(*m.grid(), f.components[0].clone(), f.components[1].clone()).ok()
}

pub fn collect_series(trace: &FlowTrace, alpha: WindingClass, opts: &MonitorOptions) -> Result<Series> {
    let times = trace.times();
    let has_form = trace.snapshots.iter().all(|s| s.form.is_some());
    let mut sup_norms = has_form.then(Vec::new);
    let mut periods: Vec<Vec<f64>> = Vec::new();
    if has_form {
        for s in &trace.snapshots {
            let f = s.form.as_ref().expect("checked");
            let (sup, per) = match &s.metric {
                Metric::Torus(m) => {
                    let phi = torus_form(s).ok_or_else(|| Error::InvalidClass("malformed form".into()))?;
                    (sup_norm(&phi, m), vec![period(&phi, [1, 0]).value, period(&phi, [0, 1]).value])
                }
                Metric::Warped(m) => (radial_sup_norm(&f.components[0], m), vec![radial_period(&f.components[0], m)]),
            };
            if let Some(v) = sup_norms.as_mut() {
                v.push(sup);
            }
            if periods.is_empty() {
                periods = vec![Vec::new(); per.len()];
            }
            for (k, p) in per.into_iter().enumerate() {
                periods[k].push(p);
            }
        }
    }
    let phi_periods = if has_form {
        periods.iter().map(|p| p[0]).collect()
    } else {
        opts.phi_periods.clone().unwrap_or_default()
    };

    let mut comass = Vec::new();
    let mut comass_logs = Vec::new();
    if opts.comass_stride > 0 && !phi_periods.is_empty() {
        let last = trace.snapshots.len() - 1;
        for (i, s) in trace.snapshots.iter().enumerate() {
            if i % opts.comass_stride != 0 && i != last {
                continue;
            }
            let sample = match &s.metric {
                Metric::Torus(m) => {
                    let cls = match torus_form(s) {
                        Some(phi) => CohomologyClass::new(phi)?,
                        None => CohomologyClass::from_periods(*m.grid(), [phi_periods[0], phi_periods[1]]),
                    };
                    let r = comass_norm(&cls, m, &opts.comass);
                    comass_logs.push((s.t, r.log_csv()));
                    ComassSample {
                        t: s.t,
                        value: r.value,
                        lower: r.lower,
                        gap: r.gap,
                    }
                }
                Metric::Warped(m) => {
                    let v = radial_comass(phi_periods[0], m);
                    ComassSample {
                        t: s.t,
                        value: v,
                        lower: v,
                        gap: 0.0,
                    }
                }
            };
            comass.push(sample);
        }
    }

    let lengths = track_min_lengths(trace, alpha, &opts.shorten)?;
    let mut stable_norm = Vec::new();
    if opts.k_max > 0 {
        for (s, c) in trace.snapshots.iter().zip(&lengths.loops) {
            let surface = LoopSurface::new(&s.metric);
            stable_norm.push(stable_norm_from(c.clone(), &surface, opts.k_max, &opts.shorten)?.estimate);
        }
    }
    if !has_form && !phi_periods.is_empty() {
        periods = phi_periods.iter().map(|p| vec![*p; times.len()]).collect();
    }
    Ok(Series {
        times,
        sup_norms,
        comass,
        lengths,
        stable_norm,
        periods,
        comass_logs,
    })
}
