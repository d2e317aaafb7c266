//! Scenario execution: flow, monitors, verdict and artifacts.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::{Family, ScenarioConfig};
use crate::error::{Error, Result};
use crate::flow::{blowup_rate_check, rmin_comparison_check, run_flow, DilationSpec, FlowTrace};
use crate::hodge::{potential_track, CoupledTorus, CoupledWarped};
use crate::monitor::{
    bundle_from_series, collect_series, corollary_check, duality_check, main_theorem_check, track_monotones, Series,
    Verdict,
};

/// Runs the configured flow from its initial data.
pub fn simulate(cfg: &ScenarioConfig) -> Result<FlowTrace> {
    match cfg.family {
        Family::Torus => {
            let (m, form) = cfg.build_torus()?;
            match form {
                Some(phi) => run_flow(&CoupledTorus::new(m, phi)?, &cfg.flow),
                None => run_flow(&m, &cfg.flow),
            }
        }
        Family::Warped => {
            let (m, form) = cfg.build_warped()?;
            match form {
                Some(f) => run_flow(&CoupledWarped::new(m, f)?, &cfg.flow),
                None => run_flow(&m, &cfg.flow),
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct Evaluation {
    pub verdict: Verdict,
    pub series: Option<Series>,
}

fn snap(trace: &FlowTrace, t: f64) -> f64 {
    trace
        .snapshots
        .iter()
        .map(|s| s.t)
        .min_by(|a, b| (a - t).abs().total_cmp(&(b - t).abs()))
        .unwrap_or(0.0)
}

/// Resolves the ladder of `cfg` against the singular time of `trace`.
pub fn dilation_ladder(cfg: &ScenarioConfig, trace: &FlowTrace) -> Vec<DilationSpec> {
    let Some(d) = &cfg.dilation else {
        return Vec::new();
    };
    d.fractions
        .iter()
        .enumerate()
        .map(|(j, f)| {
            let t_j = snap(trace, f * trace.t_num);
            let lambda = d.lambda.as_ref().map_or(1.0 / (trace.t_num - t_j), |l| l[j]);
            DilationSpec::new(lambda, t_j)
        })
        .collect()
}

/// Every monitor applicable to `cfg` on `trace`; pure post-processing.
pub fn evaluate(cfg: &ScenarioConfig, trace: &FlowTrace) -> Result<Evaluation> {
    let slacks = cfg.monitor.slacks;
    let mut monotones = Vec::new();
    let mut bounds = Vec::new();
    let mut series = None;
    if let Some(alpha) = cfg.winding() {
        let s = collect_series(trace, alpha, &cfg.monitor_options())?;
        monotones = track_monotones(&s, &slacks);
        if cfg.form.is_some() {
            let bundle = bundle_from_series(&s, alpha)?;
            bounds.push(main_theorem_check(&bundle, slacks.main));
            if !s.stable_norm.is_empty() {
                bounds.push(duality_check(&s, &bundle, slacks.duality));
            }
        }
        series = Some(s);
    }
    let mut v = Verdict::new(&cfg.name, monotones, bounds);
    v.notes.push(match trace.termination {
        crate::flow::Termination::Completed => format!("completed at t = {}", trace.last().t),
        crate::flow::Termination::SingularityImminent { t, radius } => {
            format!("singularity imminent at t = {t} (radius {radius:.3e}); T_num = {}", trace.t_num)
        }
    });
    let cmp = rmin_comparison_check(trace, cfg.monitor.rmin_slack);
    v = v.with_check("rmin_comparison", cmp.pass);
    if trace.termination.is_singular() {
        let b = blowup_rate_check(trace)?;
        v.notes.push(format!("blowup constant (T_num - t) sup|Rm| >= {:.6}", b.constant));
        v = v.with_check("blowup_rate", b.pass);
    }
    if cfg.form.is_some() {
        let p = potential_track(trace)?;
        v.notes.push(format!("potential identity residual rate {:.3e}", p.residual_rate));
        v = v.with_check("potential_identity", p.residual_rate <= cfg.monitor.potential_rate);
    }
    if let (Some(d), Some(alpha)) = (&cfg.dilation, cfg.winding()) {
        if trace.termination.is_singular() {
            let ladder = dilation_ladder(cfg, trace);
            let r = corollary_check(trace, alpha, &ladder, &cfg.monitor_options().shorten, d.tolerance)?;
            v = v.with_corollary(r);
        } else {
            v.notes.push("dilation ladder skipped: the run did not reach a singularity".into());
            v = v.with_check("corollary_applicable", false);
        }
    }
    Ok(Evaluation { verdict: v, series })
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub dir: PathBuf,
    pub trace: FlowTrace,
    pub evaluation: Evaluation,
}

fn io(path: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |e| Error::Serialization(format!("{}: {e}", path.display()))
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(io(path))
}

/// Writes geodesic dumps, comass logs and the verdict for an evaluation.
pub fn write_evaluation(dir: &Path, e: &Evaluation) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(io(dir))?;
    if let Some(s) = &e.series {
        let mut g = String::from("snapshot,t,index,x,y,length,residual\n");
        for (k, c) in s.lengths.loops.iter().enumerate() {
            for (i, p) in c.vertices().iter().enumerate() {
                let _ = writeln!(
                    g,
                    "{k},{},{i},{},{},{},{}",
                    s.lengths.times[k], p[0], p[1], s.lengths.lengths[k], s.lengths.residuals[k]
                );
            }
        }
        write(&dir.join("geodesics.csv"), &g)?;
        let mut c = String::from("t,value,lower,gap\n");
        for r in &s.comass {
            let _ = writeln!(c, "{},{},{},{}", r.t, r.value, r.lower, r.gap);
        }
        write(&dir.join("comass.csv"), &c)?;
        if !s.comass_logs.is_empty() {
            let logs = dir.join("comass_logs");
            std::fs::create_dir_all(&logs).map_err(io(&logs))?;
            for (k, (_, log)) in s.comass_logs.iter().enumerate() {
                write(&logs.join(format!("comass_{k:03}.csv")), log)?;
            }
        }
    }
    write(&dir.join("verdict.json"), &e.verdict.to_json()?)
}

/// Runs `cfg` and writes `config.toml`, `trace.{json,csv}`, `geodesics.csv`,
/// `comass.csv`, `comass_logs/` and `verdict.json` into `dir`. A numerical
/// failure leaves `events.log` behind and returns the error.
pub fn run_scenario(cfg: &ScenarioConfig, dir: &Path) -> Result<RunOutcome> {
    cfg.validate()?;
    std::fs::create_dir_all(dir).map_err(io(dir))?;
    write(&dir.join("config.toml"), &cfg.to_toml()?)?;
    let attempt = || -> Result<RunOutcome> {
        let trace = simulate(cfg)?;
        trace.write(dir, "trace")?;
        let evaluation = evaluate(cfg, &trace)?;
        write_evaluation(dir, &evaluation)?;
        Ok(RunOutcome {
            dir: dir.to_path_buf(),
            trace,
            evaluation,
        })
    };
    attempt().inspect_err(|e| {
        let _ = std::fs::write(dir.join("events.log"), format!("{}: {e}\n", cfg.name));
    })
}
