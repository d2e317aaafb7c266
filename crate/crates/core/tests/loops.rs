use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use ricci_core::flow::{run_flow, step_warped_flow, FlowConfig};
use ricci_core::geom::{ConformalTorusMetric, WarpedMetric};
use ricci_core::loops::*;
use ricci_core::{PeriodicGrid1, PeriodicGrid2};
use std::f64::consts::TAU;

fn torus(n: usize, u: impl Fn(f64, f64) -> f64) -> LoopSurface {
    LoopSurface::torus(&ConformalTorusMetric::from_fn(PeriodicGrid2::square(n).unwrap(), u).unwrap())
}

fn bumpy(n: usize) -> LoopSurface {
    torus(n, |x, y| 0.3 * x.sin() * y.cos())
}

const H: WindingClass = WindingClass::Torus { p: 1, q: 0 };

#[test]
fn minimizer_hugs_valley_of_conformal_factor() {
    let s = torus(32, |_, y| 0.3 * y.cos());
    let r = min_length(H, &s, &ShortenOptions::default(), None).unwrap();
    assert!(r.length >= TAU * (-0.3f64).exp() - 1e-6 && r.length <= TAU * 0.3f64.exp());
    assert!((r.length - TAU * (-0.3f64).exp()).abs() < 1e-4, "{}", r.length);
    assert!(r.best.curve.vertices().iter().all(|v| (v[1].rem_euclid(TAU) - std::f64::consts::PI).abs() < 1e-3));
}

#[test]
fn warped_circle_has_fibre_length() {
    let g = PeriodicGrid1::new(128, TAU).unwrap();
    let m = WarpedMetric::from_fn(3, g, |x| 1.0 + 0.2 * x.sin(), |x| 1.0 - 0.5 * x.cos()).unwrap();
    let s = LoopSurface::warped(&m);
    let r = min_length(WindingClass::Warped { k: 1 }, &s, &ShortenOptions::default(), None).unwrap();
    assert!((r.length - m.circle_length()).abs() < 1e-4, "{} vs {}", r.length, m.circle_length());
    let o = dijkstra_cover_oracle(WindingClass::Warped { k: 1 }, &s, 1, 32).unwrap();
    assert!(o.length >= r.length - 1e-6 && o.length <= r.length * (1.0 + STENCIL_BIAS));
}

#[test]
fn flat_closed_forms_and_scaling() {
    let g = PeriodicGrid2::square(16).unwrap();
    let flat = ConformalTorusMetric::flat(g);
    let s = LoopSurface::torus(&flat);
    let opts = ShortenOptions {
        vertices: 64,
        ..ShortenOptions::default()
    };
    let r = min_length(WindingClass::Torus { p: 2, q: 1 }, &s, &opts, Some(OracleOptions::default())).unwrap();
    assert!((r.length - TAU * 5f64.sqrt()).abs() < 1e-3, "{r:?}");
    assert!(!r.flagged);

    let m = ConformalTorusMetric::from_fn(g, |x, y| 0.2 * (x + y).cos()).unwrap();
    let c = LoopPolyline::straight(H, [TAU, TAU], [0.0, 0.5], 40, |t| 0.2 * (TAU * t).sin()).unwrap();
    let base = loop_length(&c, &LoopSurface::torus(&m));
    let scaled = loop_length(&c, &LoopSurface::torus(&m.scaled(4.0)));
    assert!((scaled - 2.0 * base).abs() < 1e-12 * base);
}

#[test]
fn oracle_bounds_shortening_from_above() {
    let s = bumpy(32);
    for w in [H, WindingClass::Torus { p: 1, q: 1 }] {
        let r = min_length(w, &s, &ShortenOptions::default(), Some(OracleOptions::default())).unwrap();
        let o = r.oracle.unwrap();
        assert!(o >= r.shortened - 1e-6, "{w:?}: {o} < {}", r.shortened);
        assert!(r.shortened <= o * (1.0 + STENCIL_BIAS));
        assert!(r.best.residual < 1e-3, "{}", r.best.residual);
    }
}

#[test]
fn frame_is_parallel_on_bumpy_geodesic() {
    let s = bumpy(32);
    let r = min_length(WindingClass::Torus { p: 1, q: 1 }, &s, &ShortenOptions::default(), None).unwrap();
    let f = build_frame(&r.best.curve, &s, 1e-3).unwrap();
    assert!(f.rotation_rate <= 1e-6);
    assert!((f.rotation_rate * f.length - f.holonomy_angle).abs() <= 1e-12);
    assert!(f.orthonormality_defect <= 1e-8, "{}", f.orthonormality_defect);
}

#[test]
fn minimizer_is_stable_for_seeded_fields() {
    let s = bumpy(32);
    let r = min_length(H, &s, &ShortenOptions::default(), None).unwrap();
    let f = build_frame(&r.best.curve, &s, 1e-3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let x = TestField::random(&f, 4, &mut rng);
        assert!(stability_integral(&r.best.curve, &f, &x, &s) >= -1e-6);
    }
    let summed = stability_integral(&r.best.curve, &f, &TestField::frame_sum(&f), &s);
    assert!(summed >= -1e-6, "{summed}");
}

#[test]
fn saddle_geodesic_is_unstable() {
    // y = 0 is a geodesic by reflection symmetry and sits on the crest of u
    let s = torus(64, |_, y| 0.3 * (2.0 * y).cos());
    let c = LoopPolyline::straight(H, s.periods(), [0.0, 0.0], 128, |_| 0.0).unwrap();
    let f = build_frame(&c, &s, 1e-6).unwrap();
    let v = stability_integral(&c, &f, &TestField::frame_field(&f, 0), &s);
    // K = 1.2 e^{-0.6} along y = 0 and ds = e^{0.3} dx
    let k = 1.2 * (-0.3f64).exp();
    assert!(v < 0.0);
    assert!((v + TAU * k).abs() < 1e-2 * TAU * k, "{v}");
}

#[test]
fn length_derivative_matches_flow_on_warped_circle() {
    let g = PeriodicGrid1::new(256, TAU).unwrap();
    let m0 = WarpedMetric::from_fn(3, g, |_| 1.0, |x| 1.0 - 0.5 * x.cos()).unwrap();
    let dt = 1e-4;
    let m1 = step_warped_flow(&m0, dt).unwrap();
    let m2 = step_warped_flow(&m1, dt).unwrap();
    let s1 = LoopSurface::warped(&m1);
    let c = LoopPolyline::straight(WindingClass::Warped { k: 1 }, s1.periods(), [0.0, 0.0], 256, |_| 0.0).unwrap();
    let exact = length_derivative(&c, &s1);
    let fd = length_rate_fd(&c, &LoopSurface::warped(&m0), &LoopSurface::warped(&m2), dt);
    let fibre = (m2.circle_length() - m0.circle_length()) / (2.0 * dt);
    assert!(exact > 0.0);
    assert!((exact - fd).abs() <= 1e-3 * exact.abs(), "{exact} vs {fd}");
    assert!((exact - fibre).abs() <= 1e-3 * exact.abs(), "{exact} vs {fibre}");

    let cyl = WarpedMetric::from_fn(3, g, |_| 1.0, |_| 1.0).unwrap();
    assert!(length_derivative(&c, &LoopSurface::warped(&cyl)).abs() < 1e-12);
}

#[test]
fn decay_bound_on_torus_traces() {
    let g = PeriodicGrid2::square(32).unwrap();
    let opts = ShortenOptions {
        vertices: 64,
        ..ShortenOptions::default()
    };
    let flat = run_flow(&ConformalTorusMetric::flat(g), &FlowConfig::new(1e-2, 0.5).with_stride(10)).unwrap();
    let r = decay_bound_check(&flat, H, &opts, 1e-3).unwrap();
    assert!(r.pass && r.lengths.iter().all(|l| (l - TAU).abs() < 1e-9), "{r:?}");

    let m = ConformalTorusMetric::from_fn(g, |x, y| 0.3 * x.sin() * y.cos()).unwrap();
    let trace = run_flow(&m, &FlowConfig::new(1e-2, 0.5).with_stride(100)).unwrap();
    let r = decay_bound_check(&trace, H, &opts, 1e-3).unwrap();
    assert!(r.pass, "{r:?}");
    assert_eq!(r.c_eff, 0.0);
    assert!(r.lengths.last().unwrap() > &r.lengths[0]);
}

#[test]
fn decay_bound_on_neckpinch() {
    let g = PeriodicGrid1::new(128, TAU).unwrap();
    let m = WarpedMetric::from_fn(3, g, |_| 1.0, |x| 1.0 - 0.5 * x.cos()).unwrap();
    let trace = run_flow(&m, &FlowConfig::new(1e-4, 0.1).with_stride(250)).unwrap();
    let r = decay_bound_check(&trace, WindingClass::Warped { k: 1 }, &ShortenOptions::default(), 1e-3).unwrap();
    assert!(r.pass, "{r:?}");
    assert!(r.c_eff <= 1e-10);
    for (l, s) in r.lengths.iter().zip(&trace.snapshots) {
        let exact = s.metric.as_warped().unwrap().circle_length();
        assert!((l - exact).abs() < 1e-4 * exact);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 4, ..ProptestConfig::default() })]

    #[test]
    fn stable_norm_is_subadditive(a in -0.3f64..0.3, b in -0.3f64..0.3, c in 0.0f64..TAU) {
        let s = torus(24, |x, y| a * (x + c).sin() * y.cos() + b * (2.0 * y).sin());
        let opts = ShortenOptions { vertices: 32, starts: 4, ..ShortenOptions::default() };
        let sn = stable_norm(H, &s, 4, &opts).unwrap();
        for j in 1..=4 {
            for k in 1..=4 - j {
                prop_assert!(sn.lengths[j + k - 1] <= sn.lengths[j - 1] + sn.lengths[k - 1] + 1e-6);
            }
        }
        prop_assert!(sn.estimate <= sn.lengths[0] + 1e-6);
    }
}
