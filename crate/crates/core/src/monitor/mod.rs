//! Theorem-level assertions over flow traces and machine-readable verdicts.
//!
//! Everything here is post-processing of snapshot values: no interpolation
//! between snapshots and no access to integrator internals, so a verdict can
//! be reproduced from a serialized trace.

mod series;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::{blowup_rate_check, dilate, DilationSpec, FlowTrace};
use crate::loops::{min_length, LoopSurface, ShortenOptions, WindingClass};

pub use series::{collect_series, ComassSample, MonitorOptions, Series};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    NonIncreasing,
    NonDecreasing,
    Constant,
}

/// Per-step allowance `(rate·Δt + absolute)·scale`, where `scale` is the
/// previous value's magnitude when `relative` and 1 otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Slack {
    pub rate: f64,
    pub absolute: f64,
    pub relative: bool,
}

impl Slack {
    pub fn per_unit_time(rate: f64) -> Self {
        Self {
            rate,
            absolute: 0.0,
            relative: false,
        }
    }

    pub fn absolute(absolute: f64) -> Self {
        Self {
            rate: 0.0,
            absolute,
            relative: false,
        }
    }

    pub fn relative_rate(rate: f64) -> Self {
        Self {
            rate,
            absolute: 0.0,
            relative: true,
        }
    }

    /// Resolution model `a·h² + b·dt⁴` per unit time.
    pub fn resolution(a: f64, b: f64, h: f64, dt: f64) -> Self {
        Self::per_unit_time(a * h * h + b * dt.powi(4))
    }

    fn budget(&self, prev: f64, dt: f64) -> f64 {
        let scale = if self.relative { prev.abs() } else { 1.0 };
        (self.rate * dt + self.absolute) * scale
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotoneReport {
    pub quantity: String,
    pub direction: Direction,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    /// Change in the forbidden direction per step (negative when fine). For
    /// `Constant` it is the drift from the first value.
    pub violations: Vec<f64>,
    /// Allowance per step.
    pub budgets: Vec<f64>,
    /// Largest `violation − budget`; the verdict passes iff it is `≤ 0`.
    pub worst_excess: f64,
    pub worst_violation: f64,
    pub slack: Slack,
    pub pass: bool,
}

impl MonotoneReport {
    /// `extra[i]` adds to the budget of step `i` (for example a solver gap).
    pub fn new(quantity: &str, direction: Direction, times: &[f64], values: &[f64], slack: Slack, extra: Option<&[f64]>) -> Self {
        let mut violations = Vec::new();
        let mut budgets = Vec::new();
        for i in 1..values.len() {
            let dt = times[i] - times[i - 1];
            let (v, b) = match direction {
                Direction::NonIncreasing => (values[i] - values[i - 1], slack.budget(values[i - 1], dt)),
                Direction::NonDecreasing => (values[i - 1] - values[i], slack.budget(values[i - 1], dt)),
                Direction::Constant => (
                    (values[i] - values[0]).abs(),
                    slack.budget(values[0], times[i] - times[0]),
                ),
            };
            violations.push(v);
            budgets.push(b + extra.map_or(0.0, |e| e[i - 1]));
        }
        let worst_excess = violations
            .iter()
            .zip(&budgets)
            .map(|(v, b)| v - b)
            .fold(f64::NEG_INFINITY, f64::max);
        let worst_violation = violations.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let worst_excess = if worst_excess.is_finite() { worst_excess } else { 0.0 };
        Self {
            quantity: quantity.into(),
            direction,
            times: times.to_vec(),
            values: values.to_vec(),
            violations,
            budgets,
            pass: worst_excess <= 0.0 && values.iter().all(|v| v.is_finite()),
            worst_excess,
            worst_violation: if worst_violation.is_finite() { worst_violation } else { 0.0 },
            slack,
        }
    }
}

/// Data of the main lower bound: class `α`, class `Φ` (by its periods),
/// pairing `⟨Φ, α⟩`, initial comass `N₀` and `c = pairing / N₀`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoremBundle {
    pub alpha: WindingClass,
    pub periods: Vec<f64>,
    pub pairing: f64,
    /// Certified upper value of `N_{g(0)}(Φ)`.
    pub n0: f64,
    /// Certified lower value of `N_{g(0)}(Φ)`.
    pub n0_lower: f64,
    pub c: f64,
    pub times: Vec<f64>,
    /// `L_α(t)`: shortest length in `α` at each snapshot.
    pub l_alpha: Vec<f64>,
}

impl TheoremBundle {
    pub fn new(alpha: WindingClass, periods: &[f64], n0: f64, n0_lower: f64, times: Vec<f64>, l_alpha: Vec<f64>) -> Result<Self> {
        if alpha.is_trivial() {
            return Err(Error::InvalidClass("zero winding: the bound needs a class of infinite order".into()));
        }
        let w = alpha.vector();
        let pairing: f64 = periods.iter().zip(w).map(|(p, k)| p * k as f64).sum::<f64>().abs();
        if !(pairing > 0.0) {
            return Err(Error::InvalidClass(format!("pairing ⟨Φ, α⟩ = {pairing} must be positive")));
        }
        if !(n0 > 0.0) {
            return Err(Error::InvalidClass(format!("initial comass {n0} must be positive")));
        }
        if times.len() != l_alpha.len() {
            return Err(Error::InvalidClass("length series does not match its times".into()));
        }
        Ok(Self {
            alpha,
            periods: periods.to_vec(),
            pairing,
            n0,
            n0_lower,
            c: pairing / n0,
            times,
            l_alpha,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub quantity: String,
    pub times: Vec<f64>,
    /// Quantity over its bound; the bound holds where this is at least 1.
    pub ratios: Vec<f64>,
    pub min_ratio: f64,
    pub slack: f64,
    pub pass: bool,
}

/// `L_α(t) ≥ c` at every snapshot, within `slack` on the ratio.
pub fn main_theorem_check(bundle: &TheoremBundle, slack: f64) -> BoundReport {
    let ratios: Vec<f64> = bundle.l_alpha.iter().map(|l| l / bundle.c).collect();
    let min_ratio = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    BoundReport {
        quantity: "main_lower_bound".into(),
        times: bundle.times.clone(),
        pass: min_ratio >= 1.0 - slack,
        ratios,
        min_ratio,
        slack,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorollaryRow {
    pub lambda: f64,
    pub t_j: f64,
    /// `L_α` under the dilated metric at dilated time 0.
    pub length: f64,
    /// `√λ · L_α(g(t_j))`.
    pub predicted: f64,
    /// `length / (√λ · L_α(g(0)))`.
    pub growth: f64,
    /// `sup|Rm|` of the dilated metric at dilated time 0.
    pub sup_rm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorollaryReport {
    pub rows: Vec<CorollaryRow>,
    /// Dilated lengths strictly increase along the ladder.
    pub increasing: bool,
    /// Largest `|length / predicted − 1|`.
    pub scaling_error: f64,
    pub tolerance: f64,
    /// Blowup constant `(T − t)·sup|Rm|` from the undilated trace.
    pub blowup_constant: f64,
    pub pass: bool,
}

/// Dilates the trace along `ladder` and measures `L_α` on each rescaled
/// metric independently of the undilated lengths.
pub fn corollary_check(
    trace: &FlowTrace,
    alpha: WindingClass,
    ladder: &[DilationSpec],
    opts: &ShortenOptions,
    tolerance: f64,
) -> Result<CorollaryReport> {
    if !trace.termination.is_singular() {
        return Err(Error::NotApplicable("corollary check needs a singular trace".into()));
    }
    let blowup = blowup_rate_check(trace)?;
    let l0 = min_length(alpha, &LoopSurface::new(&trace.initial().metric), opts, None)?.length;
    let mut rows = Vec::with_capacity(ladder.len());
    for spec in ladder {
        let d = dilate(trace, spec)?;
        // the full window starts before the base time; rescaled time 0 is g(t_j)
        let k = d
            .snapshots
            .iter()
            .position(|s| s.t == 0.0)
            .ok_or(Error::DilationBase {
                t_j: spec.t_j,
                nearest: f64::NAN,
            })?;
        let s = LoopSurface::new(&d.snapshots[k].metric);
        let length = min_length(alpha, &s, opts, None)?.length;
        let base = trace
            .snapshots
            .iter()
            .find(|s| (s.t - spec.t_j).abs() <= 1e-9 * spec.t_j.abs().max(1.0))
            .ok_or(Error::DilationBase {
                t_j: spec.t_j,
                nearest: f64::NAN,
            })?;
        let at_tj = min_length(alpha, &LoopSurface::new(&base.metric), opts, None)?.length;
        rows.push(CorollaryRow {
            lambda: spec.lambda,
            t_j: spec.t_j,
            length,
            predicted: spec.lambda.sqrt() * at_tj,
            growth: length / (spec.lambda.sqrt() * l0),
            sup_rm: d.diagnostics[k].sup_rm,
        });
    }
    let increasing = rows.windows(2).all(|w| w[1].length > w[0].length);
    let scaling_error = rows
        .iter()
        .map(|r| (r.length / r.predicted - 1.0).abs())
        .fold(0.0, f64::max);
    Ok(CorollaryReport {
        pass: increasing && scaling_error <= tolerance,
        rows,
        increasing,
        scaling_error,
        tolerance,
        blowup_constant: blowup.constant,
    })
}

/// Bundle for `alpha` from the first comass sample and the tracked lengths.
pub fn bundle_from_series(series: &Series, alpha: WindingClass) -> Result<TheoremBundle> {
    let first = series
        .comass
        .first()
        .ok_or_else(|| Error::NotApplicable("series has no comass sample".into()))?;
    TheoremBundle::new(
        alpha,
        &series.initial_periods(),
        first.value,
        first.lower,
        series.lengths.times.clone(),
        series.lengths.lengths.clone(),
    )
}

/// Slack settings for [`track_monotones`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Slacks {
    /// `sup|φ|` increase per unit time.
    pub sup_norm: f64,
    /// Comass increase beyond the solver gap.
    pub comass: f64,
    /// Relative decrease of the stable norm estimate.
    pub stable_norm: f64,
    /// Relative decrease of `√(ℓ² + C_eff t)` per unit time.
    pub decay: f64,
    /// Period drift relative to `max(1, |P|)`.
    pub periods: f64,
    /// Relative tolerance in `m_g · N_g ≥ pairing`.
    pub duality: f64,
    /// Slack on `min L_α / c`.
    pub main: f64,
}

impl Default for Slacks {
    fn default() -> Self {
        Self {
            sup_norm: 1e-3,
            comass: 1e-3,
            stable_norm: 1e-2,
            decay: 1e-3,
            periods: 1e-8,
            duality: 1e-3,
            main: 1e-2,
        }
    }
}

/// One report per monotone quantity in `series`.
pub fn track_monotones(series: &Series, slacks: &Slacks) -> Vec<MonotoneReport> {
    let mut out = Vec::new();
    let t = &series.times;
    if let Some(sup) = &series.sup_norms {
        out.push(MonotoneReport::new(
            "sup_norm",
            Direction::NonIncreasing,
            t,
            sup,
            Slack::per_unit_time(slacks.sup_norm),
            None,
        ));
    }
    if !series.comass.is_empty() {
        let ct: Vec<f64> = series.comass.iter().map(|c| c.t).collect();
        let cv: Vec<f64> = series.comass.iter().map(|c| c.value).collect();
        let gaps: Vec<f64> = series.comass.windows(2).map(|w| w[0].gap.max(w[1].gap)).collect();
        out.push(MonotoneReport::new(
            "comass",
            Direction::NonIncreasing,
            &ct,
            &cv,
            Slack::absolute(slacks.comass),
            Some(&gaps),
        ));
    }
    if !series.stable_norm.is_empty() {
        out.push(MonotoneReport::new(
            "stable_norm",
            Direction::NonDecreasing,
            t,
            &series.stable_norm,
            Slack {
                rate: 0.0,
                absolute: slacks.stable_norm,
                relative: true,
            },
            None,
        ));
    }
    if !series.lengths.lengths.is_empty() {
        let d = crate::loops::decay_bound_from_series(&series.lengths, slacks.decay);
        out.push(MonotoneReport::new(
            "decay_bound",
            Direction::NonDecreasing,
            &d.times,
            &d.corrected,
            Slack::relative_rate(slacks.decay),
            None,
        ));
    }
    for (k, p) in series.periods.iter().enumerate() {
        let scale = p.first().map_or(1.0, |v| v.abs().max(1.0));
        out.push(MonotoneReport::new(
            &format!("period_{k}"),
            Direction::Constant,
            t,
            p,
            Slack::absolute(slacks.periods * scale),
            None,
        ));
    }
    out
}

/// `m_g · N_g ≥ ⟨Φ, η(Γ)⟩` at every snapshot with a comass sample; the
/// ratios are `m_g·N_g / pairing`.
pub fn duality_check(series: &Series, bundle: &TheoremBundle, tolerance: f64) -> BoundReport {
    let mut times = Vec::new();
    let mut ratios = Vec::new();
    for c in &series.comass {
        if let Some(i) = series.times.iter().position(|x| *x == c.t) {
            if let Some(m) = series.stable_norm.get(i) {
                times.push(c.t);
                ratios.push(m * c.value / bundle.pairing);
            }
        }
    }
    let min_ratio = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    BoundReport {
        quantity: "duality".into(),
        times,
        pass: ratios.is_empty() || min_ratio >= 1.0 - tolerance,
        ratios,
        min_ratio,
        slack: tolerance,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub scenario: String,
    pub monotones: Vec<MonotoneReport>,
    pub bounds: Vec<BoundReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub corollary: Option<CorollaryReport>,
    /// Additional named checks and their outcomes.
    pub checks: Vec<(String, bool)>,
    /// Free-form context such as how the run terminated.
    #[serde(default)]
    pub notes: Vec<String>,
    pub pass: bool,
}

impl Verdict {
    pub fn new(scenario: &str, monotones: Vec<MonotoneReport>, bounds: Vec<BoundReport>) -> Self {
        let mut v = Self {
            scenario: scenario.into(),
            monotones,
            bounds,
            corollary: None,
            checks: Vec::new(),
            notes: Vec::new(),
            pass: true,
        };
        v.refresh();
        v
    }

    pub fn with_check(mut self, name: &str, pass: bool) -> Self {
        self.checks.push((name.into(), pass));
        self.refresh();
        self
    }

    pub fn with_corollary(mut self, r: CorollaryReport) -> Self {
        self.corollary = Some(r);
        self.refresh();
        self
    }

    fn refresh(&mut self) {
        self.pass = self.monotones.iter().all(|m| m.pass)
            && self.bounds.iter().all(|b| b.pass)
            && self.corollary.as_ref().map_or(true, |c| c.pass)
            && self.checks.iter().all(|c| c.1);
    }

    pub fn failures(&self) -> Vec<String> {
        let mut out: Vec<String> = self.monotones.iter().filter(|m| !m.pass).map(|m| m.quantity.clone()).collect();
        out.extend(self.bounds.iter().filter(|b| !b.pass).map(|b| b.quantity.clone()));
        if self.corollary.as_ref().is_some_and(|c| !c.pass) {
            out.push("corollary".into());
        }
        out.extend(self.checks.iter().filter(|c| !c.1).map(|c| c.0.clone()));
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn monotone_report_budgets() {
        let t = [0.0, 0.5, 1.0];
        let r = MonotoneReport::new("x", Direction::NonIncreasing, &t, &[1.0, 1.0004, 1.0], Slack::per_unit_time(1e-3), None);
        assert!(r.pass);
        assert!((r.worst_violation - 4e-4).abs() < 1e-12);
        let r = MonotoneReport::new("x", Direction::NonIncreasing, &t, &[1.0, 1.001, 1.0], Slack::per_unit_time(1e-3), None);
        assert!(!r.pass && r.worst_excess > 0.0);
        let r = MonotoneReport::new("x", Direction::NonDecreasing, &t, &[1.0, 0.9995, 2.0], Slack::relative_rate(1e-3), None);
        assert!(r.pass);
        let r = MonotoneReport::new("p", Direction::Constant, &t, &[2.0, 2.0, 2.0 + 1e-6], Slack::absolute(1e-8), None);
        assert!(!r.pass);
    }

    #[test]
    fn bundle_rejects_trivial_classes() {
        let w = WindingClass::Torus { p: 0, q: 0 };
        assert!(TheoremBundle::new(w, &[1.0, 0.0], 1.0, 1.0, vec![], vec![]).is_err());
        let w = WindingClass::Torus { p: 0, q: 1 };
        assert!(TheoremBundle::new(w, &[1.0, 0.0], 1.0, 1.0, vec![], vec![]).is_err());
        let b = TheoremBundle::new(w, &[1.0, -3.0], 1.5, 1.5, vec![0.0], vec![2.0]).unwrap();
        assert_eq!(b.pairing, 3.0);
        assert_eq!(b.c, 2.0);
        assert!((main_theorem_check(&b, 0.0).min_ratio - 1.0).abs() < 1e-15);
    }

    #[test]
    fn verdict_round_trips() {
        let r = MonotoneReport::new("x", Direction::Constant, &[0.0, 1.0], &[1.0, 1.0], Slack::absolute(0.0), None);
        let v = Verdict::new("s", vec![r], vec![]).with_check("extra", false);
        assert!(!v.pass);
        assert_eq!(v.failures(), vec!["extra".to_string()]);
        assert_eq!(Verdict::from_json(&v.to_json().unwrap()).unwrap(), v);
    }
}
