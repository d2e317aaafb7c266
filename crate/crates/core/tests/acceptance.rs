//! Acceptance suite at the default scale (torus 128², warped nx = 256).
//! Prints one PASS/FAIL line per criterion and exits non-zero on any failure.

use std::f64::consts::TAU;
use std::time::Instant;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ricci_core::flow::*;
use ricci_core::geom::oracle::CurvatureOracle;
use ricci_core::geom::{torus_curvature, total_curvature, warped_curvature, ConformalTorusMetric, WarpedMetric};
use ricci_core::hodge::{d0, d1, CoupledTorus, potential_track, sup_norm, weitzenbock_check, DecOperators, OneForm};
use ricci_core::loops::*;
use ricci_core::monitor::{MonotoneReport, Series, Verdict};
use ricci_core::scenario::{evaluate, preset, simulate, Family, ScenarioConfig};
use ricci_core::{PeriodicGrid1, PeriodicGrid2, Result};

const TORUS_N: usize = 128;
const WARPED_N: usize = 256;

struct Run {
    cfg: ScenarioConfig,
    trace: FlowTrace,
    verdict: Verdict,
    series: Series,
}

impl Run {
    fn monotone(&self, q: &str) -> Option<&MonotoneReport> {
        self.verdict.monotones.iter().find(|m| m.quantity == q)
    }

    fn bound(&self, q: &str) -> Option<&ricci_core::monitor::BoundReport> {
        self.verdict.bounds.iter().find(|b| b.quantity == q)
    }
}

/// Presets at the acceptance scale; strides keep about a dozen snapshots.
fn scaled(name: &str) -> Result<ScenarioConfig> {
    let mut cfg = preset(name)?;
    match cfg.family {
        Family::Torus => {
            cfg.grid.n = TORUS_N;
            cfg.flow.snapshot_stride = 400;
        }
        Family::Warped => {
            cfg.grid.n = WARPED_N;
            cfg.flow.snapshot_stride = if name == "cylinder-soliton" { 500 } else { 100 };
        }
    }
    Ok(cfg)
}

struct Runs {
    all: Vec<Run>,
}

impl Runs {
    fn new() -> Result<Self> {
        let mut all = Vec::new();
        let mut neck_trace = None;
        for name in ["flat-torus", "bumpy-torus", "cylinder-soliton", "neckpinch-n3", "dilation-ladder"] {
            let cfg = scaled(name)?;
            // the ladder shares the neckpinch trace
            let trace = match (name, &neck_trace) {
                ("dilation-ladder", Some(t)) => Clone::clone(t),
                _ => simulate(&cfg)?,
            };
            if name == "neckpinch-n3" {
                neck_trace = Some(trace.clone());
            }
            let e = evaluate(&cfg, &trace)?;
            all.push(Run {
                cfg,
                trace,
                verdict: e.verdict,
                series: e.series.expect("every preset has a class"),
            });
        }
        Ok(Self { all })
    }

    fn get(&self, name: &str) -> &Run {
        self.all.iter().find(|r| r.cfg.name == name).expect("known preset")
    }
}

type Outcome = (bool, String);

fn c1_soliton() -> Result<Outcome> {
    let g = PeriodicGrid1::new(WARPED_N, TAU)?;
    let m = WarpedMetric::from_fn(3, g, |_| 1.0, |_| 1.0)?;
    let trace = run_flow(&m, &FlowConfig::new(1e-4, 0.2))?;
    let last = trace.last();
    let psi = last.metric.as_warped().expect("warped").psi();
    let err = psi.iter().map(|p| (p * p - (1.0 - 2.0 * last.t)).abs()).fold(0.0, f64::max);
    let alt = cylinder_soliton(3, g, 1.0, 0.2, SolitonVariant::Alternate)?;
    Ok((
        last.t == 0.2 && err <= 1e-4,
        format!(
            "max |ψ² − (1 − 2t)| = {err:.2e} at t = {}; the 2(n−1) slope would give ψ² = {:.3}, measured {:.6}",
            last.t,
            alt.psi()[0].powi(2),
            psi[0].powi(2)
        ),
    ))
}

fn c2_maximum_principle(runs: &Runs) -> Result<Outcome> {
    let mut pass = true;
    let mut parts = Vec::new();
    for name in ["flat-torus", "bumpy-torus", "neckpinch-n3"] {
        let r = runs.get(name).monotone("sup_norm").expect("form carried");
        pass &= r.pass;
        parts.push(format!("{name} worst rise {:.2e}", r.worst_violation.max(0.0)));
    }
    // spectral oracle on the pointwise-sampled form (1 + 0.3 sin x) dx
    let g = PeriodicGrid2::square(TORUS_N)?;
    let phi0 = OneForm::from_fn(g, |x, _| 1.0 + 0.3 * x.sin(), |_, _| 0.0)?;
    let state = CoupledTorus::new(ConformalTorusMetric::flat(g), phi0)?;
    let trace = run_flow(&state, &FlowConfig::new(1e-3, 1.0).with_stride(250))?;
    let mut err: f64 = 0.0;
    for s in &trace.snapshots {
        let f = s.form.as_ref().expect("form carried");
        let m = s.metric.as_torus().expect("torus");
        let phi = OneForm::new(*m.grid(), f.components[0].clone(), f.components[1].clone())?;
        err = err.max((sup_norm(&phi, m) - (1.0 + 0.3 * (-s.t).exp())).abs());
    }
    pass &= err <= 1e-4;
    parts.push(format!("flat spectral error {err:.2e}"));
    Ok((pass, parts.join("; ")))
}

fn c3_comass(runs: &Runs) -> Result<Outcome> {
    let mut pass = true;
    let mut parts = Vec::new();
    for r in &runs.all {
        let m = r.monotone("comass").expect("comass sampled");
        let p = potential_track(&r.trace)?;
        pass &= m.pass && p.residual_rate <= 5e-3;
        parts.push(format!(
            "{} excess {:.1e} potential {:.1e}",
            r.cfg.name, m.worst_excess, p.residual_rate
        ));
    }
    Ok((pass, parts.join("; ")))
}

fn c4_main_bound(runs: &Runs) -> Result<Outcome> {
    let mut pass = true;
    let mut parts = Vec::new();
    for r in &runs.all {
        let b = r.bound("main_lower_bound").expect("form and class");
        pass &= b.min_ratio >= 1.0 - 1e-2;
        parts.push(format!("{} {:.5}", r.cfg.name, b.min_ratio));
    }
    let flat = runs.get("flat-torus").bound("main_lower_bound").expect("form and class");
    let dev = flat.ratios.iter().map(|r| (r - 1.0).abs()).fold(0.0, f64::max);
    pass &= dev <= 1e-3;
    parts.push(format!("flat equality within {dev:.1e}"));
    Ok((pass, format!("min L·N₀/pairing: {}", parts.join("; "))))
}

fn c5_decay(runs: &Runs) -> Result<Outcome> {
    let mut pass = true;
    let mut parts = Vec::new();
    for r in &runs.all {
        let d = r.monotone("decay_bound").expect("lengths tracked");
        let rate = r.series.lengths.rotation_rates.iter().copied().fold(0.0, f64::max);
        pass &= d.pass && rate <= 1e-6;
        parts.push(format!("{} rate {rate:.1e} excess {:.1e}", r.cfg.name, d.worst_excess));
    }
    Ok((pass, parts.join("; ")))
}

fn c6_stable_norm(runs: &Runs) -> Result<Outcome> {
    let mut pass = true;
    let mut parts = Vec::new();
    for r in &runs.all {
        let m = r.monotone("stable_norm").expect("stable norm sampled");
        let d = r.bound("duality").expect("duality checked");
        pass &= m.pass && d.pass;
        parts.push(format!("{} drop {:.1e} m·N/pairing ≥ {:.5}", r.cfg.name, m.worst_violation.max(0.0), d.min_ratio));
    }
    Ok((pass, parts.join("; ")))
}

fn c7_corollary(runs: &Runs) -> Result<Outcome> {
    let mut pass = true;
    let mut parts = Vec::new();
    for r in &runs.all {
        let c = rmin_comparison_check(&r.trace, 1e-3);
        if c.r0 > 0.0 {
            pass &= c.pass;
            parts.push(format!("{} R_min margin {:.1e}", r.cfg.name, c.worst_margin));
        }
    }
    for name in ["cylinder-soliton", "neckpinch-n3"] {
        let t = &runs.get(name).trace;
        let b = blowup_rate_check(t)?;
        let t_j = t.snapshots[t.snapshots.len() / 2].t;
        let d = dilate(t, &DilationSpec::new(1.0 / (t.t_num - t_j), t_j))?;
        let bd = blowup_rate_check(&d)?;
        let drift = (bd.constant - b.constant).abs() / b.constant;
        pass &= b.pass && b.constant > 0.0 && drift <= 1e-9;
        parts.push(format!("{name} blowup constant {:.4} (dilated drift {drift:.1e})", b.constant));
    }
    let cyl = runs.get("cylinder-soliton").verdict.corollary.as_ref().expect("ladder");
    let growth = cyl.rows.iter().map(|r| (r.growth - 1.0).abs()).fold(0.0, f64::max);
    pass &= cyl.pass && cyl.increasing && growth <= 2e-2;
    parts.push(format!("cylinder L/(√λ L₀) within {growth:.1e}"));
    let ladder = runs.get("dilation-ladder").verdict.corollary.as_ref().expect("ladder");
    pass &= ladder.pass && ladder.increasing;
    let lens: Vec<String> = ladder.rows.iter().map(|r| format!("{:.2}", r.length)).collect();
    parts.push(format!("neckpinch ladder lengths [{}]", lens.join(", ")));
    Ok((pass, parts.join("; ")))
}

fn random_u(rng: &mut ChaCha8Rng) -> impl Fn(f64, f64) -> f64 + Clone {
    let c: Vec<f64> = (0..6).map(|_| rng.gen_range(-0.3..0.3)).collect();
    move |x, y| c[0] * (x + c[1]).sin() * y.cos() + c[2] * (2.0 * y + c[3]).cos() + c[4] * (x - y + c[5]).sin()
}

fn order(a: f64, b: f64) -> f64 {
    (a / b).log2()
}

fn c8_cross_checks() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut parts = Vec::new();
    let mut pass = true;

    let g = PeriodicGrid2::square(TORUS_N)?;
    let m = ConformalTorusMetric::from_fn(g, random_u(&mut rng))?;
    let f: Vec<f64> = (0..g.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let dd = d1(&d0(&g, &f)).iter().fold(0.0_f64, |a, v| a.max(v.abs())) * g.hx() * g.hy();
    pass &= dd <= 1e-14;
    let ops = DecOperators::new(&m);
    let phi = OneForm::new(
        g,
        (0..g.len()).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        (0..g.len()).map(|_| rng.gen_range(-1.0..1.0)).collect(),
    )?;
    let (l, r) = (ops.inner1(&ops.d0(&f), &phi), ops.inner0(&f, &ops.codifferential(&phi)));
    let adj = (l - r).abs() / l.abs().max(1.0);
    pass &= adj <= 1e-10;
    parts.push(format!("h²·|dd| {dd:.1e}, adjointness {adj:.1e}"));

    let u = random_u(&mut rng);
    let w: Vec<f64> = [32, 64, 128]
        .iter()
        .map(|&n| {
            let g = PeriodicGrid2::square(n).expect("grid");
            let m = ConformalTorusMetric::from_fn(g, u.clone()).expect("metric");
            let phi = OneForm::from_fn(g, |x, y| 1.0 + 0.2 * (x - y).sin(), |x, _| 0.3 * x.cos()).expect("form");
            weitzenbock_check(&m, &phi)
        })
        .collect();
    let wo = order(w[1], w[2]);
    pass &= wo >= 1.9;
    parts.push(format!("Weitzenböck order {wo:.2}"));

    let metric = {
        let u = u.clone();
        move |p: &[f64]| DMatrix::from_diagonal_element(2, 2, (2.0 * u(p[0], p[1])).exp())
    };
    let oracle = CurvatureOracle::new(2, 1e-3, &metric)?;
    let mut torus_err = Vec::new();
    for n in [32, 64] {
        let g = PeriodicGrid2::square(n)?;
        let k = torus_curvature(&ConformalTorusMetric::from_fn(g, u.clone())?);
        let mut e: f64 = 0.0;
        for j in (0..n).step_by(n / 4) {
            for i in (0..n).step_by(n / 4) {
                e = e.max((0.5 * oracle.at(&[g.x(i), g.y(j)])?.scalar - k.gauss[j * n + i]).abs());
            }
        }
        torus_err.push(e);
    }
    let to = order(torus_err[0], torus_err[1]);
    let psi = |x: f64| 1.0 + 0.2 * x.cos() + 0.05 * (2.0 * x + 0.3).sin();
    let phi_w = |x: f64| 1.0 + 0.1 * x.sin();
    let wmetric = |p: &[f64]| {
        DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            phi_w(p[0]).powi(2),
            psi(p[0]).powi(2),
            psi(p[0]).powi(2) * p[1].sin().powi(2),
        ]))
    };
    let woracle = CurvatureOracle::new(3, 1e-3, &wmetric)?;
    let mut warped_err = Vec::new();
    for n in [32, 64] {
        let g = PeriodicGrid1::new(n, TAU)?;
        let c = warped_curvature(&WarpedMetric::from_fn(3, g, phi_w, psi)?);
        let mut e: f64 = 0.0;
        for i in (0..n).step_by(n / 8) {
            let r = woracle.at(&[g.x(i), 1.0, 1.0])?;
            e = e
                .max((r.ricci_along(&[1.0, 0.0, 0.0]) - c.ric_s[i]).abs())
                .max((r.ricci_along(&[0.0, 1.0, 0.0]) - c.ric_sph[i]).abs())
                .max((r.scalar - c.scalar[i]).abs());
        }
        warped_err.push(e);
    }
    let wo2 = order(warped_err[0], warped_err[1]);
    pass &= to >= 1.9 && wo2 >= 1.9;
    parts.push(format!("curvature order torus {to:.2} warped {wo2:.2}"));

    let k = torus_curvature(&m);
    let total = total_curvature(&m, &k);
    let abs: f64 = k.gauss.iter().zip(m.u()).map(|(k, u)| k.abs() * (2.0 * u).exp()).sum::<f64>() * g.cell_area();
    let budget = 10.0 * g.hx() * g.hx() * abs;
    pass &= total.abs() <= budget;
    parts.push(format!("|∫K dA| {:.1e} ≤ {budget:.1e}", total.abs()));

    let opts = ShortenOptions {
        vertices: 64,
        ..ShortenOptions::default()
    };
    let mut worst: f64 = f64::NEG_INFINITY;
    for k in 0..10 {
        let s = LoopSurface::torus(&ConformalTorusMetric::from_fn(PeriodicGrid2::square(32)?, random_u(&mut rng))?);
        let w = if k % 2 == 0 {
            WindingClass::Torus { p: 1, q: 0 }
        } else {
            WindingClass::Torus { p: 1, q: 1 }
        };
        let r = min_length(w, &s, &opts, Some(OracleOptions::default()))?;
        let o = r.oracle.expect("oracle requested");
        let ok = r.shortened <= o * (1.0 + STENCIL_BIAS) && o >= r.shortened - 1e-6;
        pass &= ok;
        worst = worst.max(r.shortened / o - 1.0);
    }
    parts.push(format!("sandwich on 10 metrics, worst shortened/oracle − 1 = {worst:.1e}"));
    Ok((pass, parts.join("; ")))
}

fn c9_stability() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut pass = true;
    let mut parts = Vec::new();
    let bumpy = LoopSurface::torus(&ConformalTorusMetric::from_fn(PeriodicGrid2::square(TORUS_N)?, |x, y| {
        0.3 * x.sin() * y.cos()
    })?);
    let neck = LoopSurface::warped(&WarpedMetric::from_fn(3, PeriodicGrid1::new(WARPED_N, TAU)?, |_| 1.0, |x| {
        1.0 - 0.5 * x.cos()
    })?);
    for (label, s, w) in [
        ("bumpy torus", &bumpy, WindingClass::Torus { p: 1, q: 0 }),
        ("neckpinch", &neck, WindingClass::Warped { k: 1 }),
    ] {
        let r = min_length(w, s, &ShortenOptions::default(), Some(OracleOptions::default()))?;
        let certified = !r.flagged && r.best.residual <= 1e-3;
        let f = build_frame(&r.best.curve, s, 1e-3)?;
        let mut min = stability_integral(&r.best.curve, &f, &TestField::frame_sum(&f), s);
        for _ in 0..20 {
            min = min.min(stability_integral(&r.best.curve, &f, &TestField::random(&f, 4, &mut rng), s));
        }
        pass &= certified && min >= -1e-6;
        parts.push(format!("{label} min over 21 fields {min:.3e}"));
    }
    let saddle = LoopSurface::torus(&ConformalTorusMetric::from_fn(PeriodicGrid2::square(TORUS_N)?, |_, y| {
        0.3 * (2.0 * y).cos()
    })?);
    let c = LoopPolyline::straight(WindingClass::Torus { p: 1, q: 0 }, saddle.periods(), [0.0, 0.0], 256, |_| 0.0)?;
    let f = build_frame(&c, &saddle, 1e-6)?;
    let v = stability_integral(&c, &f, &TestField::frame_field(&f, 0), &saddle);
    pass &= v < 0.0;
    parts.push(format!("saddle geodesic gives {v:.4}"));
    Ok((pass, parts.join("; ")))
}

fn main() {
    let start = Instant::now();
    let mut lines = Vec::new();
    let mut report = |id: usize, name: &str, t: Instant, r: Result<Outcome>| {
        let (pass, detail) = r.unwrap_or_else(|e| (false, format!("error: {e}")));
        let line = format!(
            "{} criterion {id} {name}: {detail} [{:.1}s]",
            if pass { "PASS" } else { "FAIL" },
            t.elapsed().as_secs_f64()
        );
        println!("{line}");
        lines.push(pass);
    };
    let t = Instant::now();
    report(1, "soliton regression", t, c1_soliton());
    let t = Instant::now();
    let runs = Runs::new();
    println!("scenario runs at 128² / nx = 256 took {:.1}s", t.elapsed().as_secs_f64());
    let checks: [(&str, fn(&Runs) -> Result<Outcome>); 6] = [
        ("maximum principle", c2_maximum_principle),
        ("comass monotone", c3_comass),
        ("main lower bound", c4_main_bound),
        ("decay bound", c5_decay),
        ("stable norm and duality", c6_stable_norm),
        ("corollary machinery", c7_corollary),
    ];
    for (k, (name, f)) in checks.into_iter().enumerate() {
        let t = Instant::now();
        let r = match &runs {
            Ok(runs) => f(runs),
            Err(e) => Err(e.clone()),
        };
        report(k + 2, name, t, r);
    }
    let t = Instant::now();
    report(8, "operator and geometry cross-checks", t, c8_cross_checks());
    let t = Instant::now();
    report(9, "stability", t, c9_stability());
    let failed = lines.iter().filter(|p| !**p).count();
    println!(
        "acceptance: {} of {} criteria pass in {:.1}s",
        lines.len() - failed,
        lines.len(),
        start.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
