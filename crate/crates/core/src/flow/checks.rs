//! Scalar-curvature comparison and blowup-rate checks on computed traces.

use serde::{Deserialize, Serialize};

use super::FlowTrace;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub t: f64,
    pub value: f64,
    pub bound: f64,
    /// How far past the bound, beyond the slack.
    pub excess: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub n: usize,
    pub r0: f64,
    pub slack: f64,
    /// Smallest `R_min(t) − bound(t)` over the trace.
    pub worst_margin: f64,
    pub violations: Vec<Violation>,
    /// `n / (2 R₀)` when `R₀ > 0`.
    pub existence_bound: Option<f64>,
    pub t_num: f64,
    pub pass: bool,
}

/// Solution of `r' = (2/n) r²` with `r(0) = r0`, infinite past blowup.
pub fn comparison_bound(n: usize, r0: f64, t: f64) -> f64 {
    let den = 1.0 - 2.0 / n as f64 * r0 * t;
    if den <= 0.0 {
        f64::INFINITY
    } else {
        r0 / den
    }
}

/// Checks `R_min(t) ≥ R₀ / (1 − (2/n) R₀ t) − slack·|R₀|` at every snapshot and,
/// for `R₀ > 0`, that the run ends before `n / (2R₀)` (plus the same relative slack).
pub fn rmin_comparison_check(trace: &FlowTrace, slack: f64) -> ComparisonReport {
    let n = trace.dim();
    let t0 = trace.diagnostics[0].t;
    let r0 = trace.diagnostics[0].r_min;
    let abs_slack = slack * r0.abs();
    let mut worst = f64::INFINITY;
    let mut violations = Vec::new();
    for d in &trace.diagnostics {
        let bound = comparison_bound(n, r0, d.t - t0);
        let margin = d.r_min - bound;
        worst = worst.min(margin);
        if margin < -abs_slack {
            violations.push(Violation {
                t: d.t,
                value: d.r_min,
                bound,
                excess: -margin - abs_slack,
            });
        }
    }
    let existence_bound = (r0 > 0.0).then(|| t0 + n as f64 / (2.0 * r0));
    let horizon_ok = existence_bound.map_or(true, |b| trace.t_num <= b * (1.0 + slack));
    ComparisonReport {
        n,
        r0,
        slack: abs_slack,
        worst_margin: worst,
        pass: violations.is_empty() && horizon_ok,
        violations,
        existence_bound,
        t_num: trace.t_num,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlowupReport {
    pub t_num: f64,
    /// `(t, (T_num − t) sup|Rm|(t))` over the late part of the run.
    pub samples: Vec<(f64, f64)>,
    /// Infimum of the late samples.
    pub constant: f64,
    pub pass: bool,
}

/// Late-time infimum of `(T_num − t)·sup|Rm|(t)`; "late" means the second half
/// of `[t_first, T_num]`, so the sampled set is invariant under dilation.
pub fn blowup_rate_check(trace: &FlowTrace) -> Result<BlowupReport> {
    if !trace.termination.is_singular() {
        return Err(Error::NotApplicable(
            "blowup rate needs a run that ended at a singularity".into(),
        ));
    }
    let t_first = trace.diagnostics[0].t;
    let t_late = t_first + 0.5 * (trace.t_num - t_first);
    let samples: Vec<(f64, f64)> = trace
        .diagnostics
        .iter()
        .filter(|d| d.t >= t_late && d.t < trace.t_num)
        .map(|d| (d.t, (trace.t_num - d.t) * d.sup_rm))
        .collect();
    let constant = samples.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
    Ok(BlowupReport {
        t_num: trace.t_num,
        pass: !samples.is_empty() && constant.is_finite() && constant > 0.0,
        constant,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cylinder_beats_comparison_solution() {
        // actual 2/(1 − 2t) against the bound 2/(1 − 4t/3)
        for k in 1..50 {
            let t = k as f64 * 0.01;
            assert!(2.0 / (1.0 - 2.0 * t) >= comparison_bound(3, 2.0, t));
        }
        assert_eq!(comparison_bound(2, 0.0, 3.0), 0.0);
    }
}
