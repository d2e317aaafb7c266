//! Shared fixtures for the benchmarks.

use ricci_core::geom::{ConformalTorusMetric, WarpedMetric};
use ricci_core::{PeriodicGrid1, PeriodicGrid2};
use std::f64::consts::TAU;

pub fn bumpy_torus(n: usize) -> ConformalTorusMetric {
    let g = PeriodicGrid2::square(n).expect("valid grid");
    ConformalTorusMetric::from_fn(g, |x, y| 0.3 * x.sin() * y.cos()).expect("finite factor")
}

pub fn neck(nx: usize) -> WarpedMetric {
    let g = PeriodicGrid1::new(nx, TAU).expect("valid grid");
    WarpedMetric::from_fn(3, g, |_| 1.0, |x| 1.0 - 0.5 * x.cos()).expect("positive radii")
}
