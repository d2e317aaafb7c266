//! Shortest-loop lengths along a flow trace and the decay-bound check
//! `ℓ(t)² + C t` non-decreasing.

use serde::{Deserialize, Serialize};

use super::{best_of, build_frame, min_length, multistart_seeds, LoopPolyline, LoopSurface, ShortenOptions, WindingClass};
use crate::error::Result;
use crate::flow::FlowTrace;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LengthSeries {
    pub winding: WindingClass,
    pub dim: usize,
    pub times: Vec<f64>,
    pub lengths: Vec<f64>,
    pub residuals: Vec<f64>,
    pub rotation_rates: Vec<f64>,
    /// `(n − 1)·rotation_rate²·length²` per snapshot.
    pub c_eff: Vec<f64>,
    pub loops: Vec<LoopPolyline>,
}

/// `ℓ_g(Γ)` at every snapshot. The first snapshot uses the full multistart;
/// later ones restart from the previous minimizer and the axis-aligned seeds.
pub fn track_min_lengths(trace: &FlowTrace, w: WindingClass, opts: &ShortenOptions) -> Result<LengthSeries> {
    let mut out = LengthSeries {
        winding: w,
        dim: trace.dim(),
        times: Vec::new(),
        lengths: Vec::new(),
        residuals: Vec::new(),
        rotation_rates: Vec::new(),
        c_eff: Vec::new(),
        loops: Vec::new(),
    };
    let mut prev: Option<LoopPolyline> = None;
    for snap in &trace.snapshots {
        let s = LoopSurface::new(&snap.metric);
        let best = match &prev {
            None => min_length(w, &s, opts, None)?.best,
            Some(p) => {
                let mut seeds = vec![p.clone()];
                let axis = ShortenOptions {
                    starts: opts.starts.min(4),
                    ..*opts
                };
                seeds.extend(multistart_seeds(w, &s, &axis)?);
                best_of(&seeds, &s, opts)?.0
            }
        };
        let frame = build_frame(&best.curve, &s, opts.residual_tol)?;
        out.times.push(snap.t);
        out.lengths.push(best.length);
        out.residuals.push(best.residual);
        out.rotation_rates.push(frame.rotation_rate);
        out.c_eff.push(frame.c_eff());
        prev = Some(best.curve.clone());
        out.loops.push(best.curve);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub times: Vec<f64>,
    pub lengths: Vec<f64>,
    /// Largest measured `C_eff` over the trace.
    pub c_eff: f64,
    /// Smallest `C ≥ 0` making `ℓ² + C t` non-decreasing on the snapshots.
    pub c_fit: f64,
    /// `√(ℓ² + C_eff t)` per snapshot.
    pub corrected: Vec<f64>,
    /// Relative slack per unit time.
    pub slack: f64,
    /// `(t, relative drop per unit time)` for each step exceeding the slack.
    pub violations: Vec<(f64, f64)>,
    /// Largest relative drop per unit time.
    pub worst: f64,
    pub pass: bool,
}

pub fn decay_bound_from_series(series: &LengthSeries, slack: f64) -> DecayReport {
    let c_eff = series.c_eff.iter().copied().fold(0.0, f64::max);
    let t = &series.times;
    let l = &series.lengths;
    let corrected: Vec<f64> = l.iter().zip(t).map(|(l, t)| (l * l + c_eff * t).sqrt()).collect();
    let mut c_fit = 0.0_f64;
    for i in 0..t.len() {
        for j in i + 1..t.len() {
            if t[j] > t[i] {
                c_fit = c_fit.max((l[i] * l[i] - l[j] * l[j]) / (t[j] - t[i]));
            }
        }
    }
    let mut violations = Vec::new();
    let mut worst = f64::NEG_INFINITY;
    for i in 1..t.len() {
        let dt = t[i] - t[i - 1];
        if dt <= 0.0 {
            continue;
        }
        let drop = (corrected[i - 1] - corrected[i]) / (corrected[i - 1] * dt);
        worst = worst.max(drop);
        if drop > slack {
            violations.push((t[i], drop));
        }
    }
    DecayReport {
        times: t.clone(),
        lengths: l.clone(),
        c_eff,
        c_fit,
        corrected,
        slack,
        pass: violations.is_empty(),
        violations,
        worst: if worst.is_finite() { worst } else { 0.0 },
    }
}

/// Tracks `ℓ_g(Γ)` along `trace` and checks the decay bound.
pub fn decay_bound_check(trace: &FlowTrace, w: WindingClass, opts: &ShortenOptions, slack: f64) -> Result<DecayReport> {
    let series = track_min_lengths(trace, w, opts)?;
    Ok(decay_bound_from_series(&series, slack))
}
