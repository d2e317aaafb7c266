use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ricci_core::flow::{run_flow, FlowConfig};
use ricci_core::geom::{ConformalTorusMetric, WarpedMetric};
use ricci_core::hodge::*;
use ricci_core::{PeriodicGrid1, PeriodicGrid2};
use std::f64::consts::TAU;

fn order(errs: &[f64]) -> f64 {
    let n = errs.len();
    (errs[n - 2] / errs[n - 1]).log2()
}

#[test]
fn weitzenbock_residual_is_second_order() {
    let errs: Vec<f64> = [32, 64, 128]
        .iter()
        .map(|&n| {
            let g = PeriodicGrid2::square(n).unwrap();
            let m = ConformalTorusMetric::from_fn(g, |x, _| 0.1 * x.sin()).unwrap();
            weitzenbock_check(&m, &OneForm::constant(g, 1.0, 0.0))
        })
        .collect();
    assert!(order(&errs) >= 1.9, "{errs:?}");

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let c: Vec<f64> = (0..6).map(|_| rng.gen_range(-0.3..0.3)).collect();
    let errs: Vec<f64> = [32, 64, 128]
        .iter()
        .map(|&n| {
            let g = PeriodicGrid2::square(n).unwrap();
            let m = ConformalTorusMetric::from_fn(g, |x, y| c[0] * (x + c[1]).sin() * y.cos() + c[2] * (2.0 * y).cos())
                .unwrap();
            let phi = OneForm::from_fn(g, |x, y| 1.0 + c[3] * (x - y).sin(), |x, _| c[4] * x.cos() + c[5]).unwrap();
            weitzenbock_check(&m, &phi)
        })
        .collect();
    assert!(order(&errs) >= 1.9, "{errs:?}");
}

fn flat_coupled(n: usize, t_end: f64) -> ricci_core::flow::FlowTrace {
    let g = PeriodicGrid2::square(n).unwrap();
    let phi0 = OneForm::from_fn(g, |x, _| 1.0 + 0.3 * x.sin(), |_, _| 0.0).unwrap();
    let state = CoupledTorus::new(ConformalTorusMetric::flat(g), phi0).unwrap();
    run_flow(&state, &FlowConfig::new(1e-3, t_end).with_stride(250)).unwrap()
}

fn form_at(s: &ricci_core::flow::Snapshot) -> OneForm {
    let f = s.form.as_ref().unwrap();
    let g = *s.metric.as_torus().unwrap().grid();
    OneForm::new(g, f.components[0].clone(), f.components[1].clone()).unwrap()
}

#[test]
fn flat_heat_flow_matches_spectral_solution() {
    let trace = flat_coupled(64, 1.0);
    for s in &trace.snapshots {
        let m = s.metric.as_torus().unwrap();
        let sup = sup_norm(&form_at(s), m);
        // wide-stencil symbol of sin x is (sin h / h)², off by h²/3
        let h = m.grid().hx();
        assert!((sup - (1.0 + 0.3 * (-s.t).exp())).abs() <= 0.3 * s.t * h * h / 3.0 + 1e-12);
    }
    let track = potential_track(&trace).unwrap();
    assert!(track.residuals.iter().all(|&r| r <= 1e-10), "{:?}", track.residuals);
}

#[test]
fn harmonic_initial_form_keeps_zero_potential() {
    let g = PeriodicGrid2::square(16).unwrap();
    let state = CoupledTorus::new(ConformalTorusMetric::flat(g), OneForm::constant(g, 1.0, 2.0)).unwrap();
    let trace = run_flow(&state, &FlowConfig::new(1e-2, 0.5)).unwrap();
    let track = potential_track(&trace).unwrap();
    assert!(track.potentials.iter().all(|p| p.max_abs() == 0.0));
}

#[test]
fn bumpy_coupled_run_is_monotone_and_class_preserving() {
    let g = PeriodicGrid2::square(48).unwrap();
    let m = ConformalTorusMetric::from_fn(g, |x, y| 0.3 * x.sin() * y.cos()).unwrap();
    let phi0 = CohomologyClass::from_periods(g, [TAU, 0.0])
        .with_exact(&g.sample(|x, y| 0.2 * (x + 2.0 * y).sin()))
        .base;
    let c0 = phi0.curl().iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    let state = CoupledTorus::new(m, phi0.clone()).unwrap();
    let trace = run_flow(&state, &FlowConfig::new(1e-2, 1.0).with_stride(100)).unwrap();
    let sups: Vec<f64> = trace
        .snapshots
        .iter()
        .map(|s| sup_norm(&form_at(s), s.metric.as_torus().unwrap()))
        .collect();
    for w in trace.snapshots.windows(2).zip(sups.windows(2)) {
        let dt = w.0[1].t - w.0[0].t;
        assert!(w.1[1] <= w.1[0] + 1e-3 * dt, "{sups:?}");
    }
    let p0 = [period(&phi0, [1, 0]).value, period(&phi0, [0, 1]).value];
    for s in &trace.snapshots {
        let phi = form_at(s);
        assert!((period(&phi, [1, 0]).value - p0[0]).abs() <= 1e-6 * p0[0].abs() * s.t.max(1e-9) + 1e-12);
        assert!(period(&phi, [0, 1]).value.abs() <= 1e-9);
        let c = phi.curl().iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        assert!(c <= c0 + 1e-10);
    }
    let track = potential_track(&trace).unwrap();
    assert!(track.residual_rate <= 5e-3, "{}", track.residual_rate);
}

#[test]
fn comass_trivial_examples() {
    let g = PeriodicGrid2::square(32).unwrap();
    let flat = ConformalTorusMetric::flat(g);
    let opts = ComassOptions::default();
    let dx = CohomologyClass::from_periods(g, [TAU, 0.0]);
    assert!((comass_norm(&dx, &flat, &opts).value - 1.0).abs() < 1e-3);
    assert!((comass_norm(&dx.scale(-2.0), &flat, &opts).value - 2.0).abs() < 2e-3);
    let diag = CohomologyClass::from_periods(g, [TAU, TAU]);
    assert!((comass_norm(&diag, &flat, &opts).value - 2f64.sqrt()).abs() < 1e-3);
    let zero = CohomologyClass::from_periods(g, [0.0, 0.0]).with_exact(&g.sample(|x, y| (x + y).sin() + 0.5 * y.cos()));
    let r = comass_norm(&zero, &flat, &opts);
    assert!(r.value < 1e-3, "{}", r.value);
}

#[test]
fn comass_matches_one_dimensional_closed_form() {
    let g = PeriodicGrid2::square(32).unwrap();
    let m = ConformalTorusMetric::from_fn(g, |x, _| 0.3 * x.sin() + 0.1 * (2.0 * x).cos()).unwrap();
    let row_len: f64 = (0..g.nx).map(|i| m.u()[i].exp()).sum::<f64>() * g.hx();
    let r = comass_norm(&CohomologyClass::from_periods(g, [TAU, 0.0]), &m, &ComassOptions::default());
    let exact = TAU / row_len;
    assert!((r.lower - exact).abs() < 1e-12);
    assert!((r.value - exact).abs() < 1e-3 * exact, "{} vs {exact}", r.value);

    let w = WarpedMetric::from_fn(3, PeriodicGrid1::new(64, TAU).unwrap(), |x| (0.3 * x.sin()).exp(), |_| 1.0)
        .unwrap();
    let len: f64 = (0..64).map(|i| (0.3 * (i as f64 * TAU / 64.0).sin()).exp()).sum::<f64>() * TAU / 64.0;
    assert!((radial_comass(TAU, &w) - TAU / len).abs() < 1e-12);
}

#[test]
fn comass_norm_axioms_on_bumpy_torus() {
    let g = PeriodicGrid2::square(24).unwrap();
    let m = ConformalTorusMetric::from_fn(g, |x, y| 0.25 * x.sin() * y.cos()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let classes: Vec<CohomologyClass> = (0..2)
        .map(|_| CohomologyClass::from_periods(g, [rng.gen_range(-6.0..6.0), rng.gen_range(-6.0..6.0)]))
        .collect();
    let report = norm_axiom_check(&m, &classes, &[-2.0, 0.5], &ComassOptions::default());
    assert!(report.pass, "{report:?}");
}
