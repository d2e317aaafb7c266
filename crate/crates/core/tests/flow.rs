use ricci_core::flow::*;
use ricci_core::geom::{ConformalTorusMetric, Metric, WarpedMetric};
use ricci_core::{PeriodicGrid1, PeriodicGrid2};
use std::f64::consts::TAU;

fn cylinder(nx: usize) -> WarpedMetric {
    WarpedMetric::from_fn(3, PeriodicGrid1::new(nx, TAU).unwrap(), |_| 1.0, |_| 1.0).unwrap()
}

fn neck(nx: usize) -> WarpedMetric {
    WarpedMetric::from_fn(3, PeriodicGrid1::new(nx, TAU).unwrap(), |_| 1.0, |x| 1.0 - 0.5 * x.cos())
        .unwrap()
}

#[test]
fn cylinder_follows_derived_soliton() {
    let trace = run_flow(&cylinder(256), &FlowConfig::new(1e-4, 0.2)).unwrap();
    let last = trace.last();
    assert_eq!(last.t, 0.2);
    let psi = last.metric.as_warped().unwrap().psi();
    let exact = cylinder_soliton(3, PeriodicGrid1::new(256, TAU).unwrap(), 1.0, 0.2, SolitonVariant::Derived)
        .unwrap();
    for (a, b) in psi.iter().zip(exact.psi()) {
        assert!((a * a - b * b).abs() <= 1e-4);
        assert!((a * a - 0.6).abs() <= 1e-4);
    }
}

#[test]
fn cylinder_vanishes_at_one_half() {
    let trace = run_flow(&cylinder(64), &FlowConfig::new(1e-4, 1.0)).unwrap();
    assert!(trace.termination.is_singular());
    assert!((trace.t_num - 0.5).abs() < 0.005, "{}", trace.t_num);
    let report = blowup_rate_check(&trace).unwrap();
    assert!((report.constant - 0.5).abs() < 0.01, "{}", report.constant);
    let cmp = rmin_comparison_check(&trace, 1e-3);
    assert!(cmp.pass, "{cmp:?}");
}

#[test]
fn neckpinch_stops_before_non_finite() {
    let m = neck(256);
    let trace = run_flow(&m, &FlowConfig::new(1e-4, 2.0)).unwrap();
    assert!(trace.termination.is_singular());
    let psi_min: Vec<f64> = trace.diagnostics.iter().map(|d| d.radius_min.unwrap()).collect();
    assert!(psi_min.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    for s in &trace.snapshots {
        let w = s.metric.as_warped().unwrap();
        assert!(w.phi().iter().chain(w.psi()).all(|v| v.is_finite() && *v > 0.0));
    }
    let report = blowup_rate_check(&trace).unwrap();
    assert!(report.pass && report.constant > 0.0, "{report:?}");
    assert!(rmin_comparison_check(&trace, 1e-3).pass);
}

#[test]
fn flat_torus_trace_is_constant() {
    let m = ConformalTorusMetric::flat(PeriodicGrid2::square(16).unwrap());
    let trace = run_flow(&m, &FlowConfig::new(1e-2, 1.0).with_stride(10)).unwrap();
    assert_eq!(trace.last().t, 1.0);
    for s in &trace.snapshots {
        assert!(s.metric.as_torus().unwrap().u().iter().all(|&u| u == 0.0));
    }
    assert!(matches!(blowup_rate_check(&trace), Err(ricci_core::Error::NotApplicable(_))));
}

#[test]
fn bumpy_torus_flattens() {
    let g = PeriodicGrid2::square(32).unwrap();
    let m = ConformalTorusMetric::from_fn(g, |x, y| 0.3 * x.sin() * y.cos()).unwrap();
    let trace = run_flow(&m, &FlowConfig::new(1e-2, 3.0).with_stride(200)).unwrap();
    let sup: Vec<f64> = trace.diagnostics.iter().map(|d| d.sup_rm).collect();
    assert!(sup.windows(2).all(|w| w[1] < w[0]), "{sup:?}");
    assert!(sup.last().unwrap() < &(0.05 * sup[0]));
    let a0 = trace.diagnostics[0].size;
    assert!(trace.diagnostics.iter().all(|d| (d.size - a0).abs() < 1e-9 * a0));
}

#[test]
fn dilation_identity_scaling_and_composition() {
    let trace = run_flow(&neck(64), &FlowConfig::new(1e-3, 2.0).with_stride(20)).unwrap();
    let same = dilate(&trace, &DilationSpec::new(1.0, 0.0)).unwrap();
    assert_eq!(same.snapshots, trace.snapshots);

    let t1 = trace.snapshots[3].t;
    let d4 = dilate(&trace, &DilationSpec::new(4.0, t1)).unwrap();
    let base = trace.snapshots.iter().position(|s| s.t == t1).unwrap();
    assert_eq!(d4.snapshots[base].t, 0.0);
    assert!((d4.diagnostics[base].sup_rm - trace.diagnostics[base].sup_rm / 4.0).abs() < 1e-12);
    assert!((d4.diagnostics[base].size - 2.0 * trace.diagnostics[base].size).abs() < 1e-12);

    let tau2 = d4.snapshots[base + 2].t;
    let twice = dilate(&d4, &DilationSpec::new(3.0, tau2)).unwrap();
    let once = dilate(&trace, &DilationSpec::new(12.0, t1 + tau2 / 4.0)).unwrap();
    assert_eq!(twice.snapshots.len(), once.snapshots.len());
    for (a, b) in twice.snapshots.iter().zip(&once.snapshots) {
        assert!((a.t - b.t).abs() < 1e-9);
        let (ma, mb) = (a.metric.as_warped().unwrap(), b.metric.as_warped().unwrap());
        for (x, y) in ma.psi().iter().zip(mb.psi()) {
            assert!((x - y).abs() < 1e-12 * x.abs());
        }
    }

    let b1 = blowup_rate_check(&trace).unwrap().constant;
    let b2 = blowup_rate_check(&d4).unwrap().constant;
    assert!((b1 - b2).abs() < 1e-9 * b1);
}

#[test]
fn dilation_rejects_bad_base_and_window() {
    let trace = run_flow(&cylinder(16), &FlowConfig::new(1e-3, 0.1).with_stride(10)).unwrap();
    assert!(matches!(
        dilate(&trace, &DilationSpec::new(2.0, 0.0123)),
        Err(ricci_core::Error::DilationBase { .. })
    ));
    let mut spec = DilationSpec::new(2.0, 0.0);
    spec.window = Some([0.0, 5.0]);
    match dilate(&trace, &spec) {
        Err(ricci_core::Error::DilationWindow { achievable_hi, .. }) => {
            assert!((achievable_hi - 0.2).abs() < 1e-12)
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn trace_round_trips_bit_exactly() {
    let trace = run_flow(&neck(32), &FlowConfig::new(1e-3, 0.05).with_stride(7)).unwrap();
    let back = FlowTrace::from_json(&trace.to_json().unwrap()).unwrap();
    assert_eq!(back, trace);
    let csv = trace.to_csv();
    assert!(csv.starts_with("t,r_min,r_max,sup_rm,size,radius_min\n"));
    assert_eq!(csv.lines().count(), trace.snapshots.len() + 1);
    assert!(matches!(trace.initial().metric, Metric::Warped(_)));
}

#[test]
fn runs_are_deterministic() {
    let g = PeriodicGrid2::square(16).unwrap();
    let m = ConformalTorusMetric::from_fn(g, |x, y| 0.2 * (x + y).sin()).unwrap();
    let cfg = FlowConfig::new(1e-2, 0.3).with_stride(5);
    assert_eq!(run_flow(&m, &cfg).unwrap(), run_flow(&m, &cfg).unwrap());
}
