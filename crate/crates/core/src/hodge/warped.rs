//! Radial 1-forms `f(x) dx` on a warped product `S¹ × S^{n-1}`.
//!
//! `H¹` is one-dimensional for `n ≥ 3`, spanned by `[dx]`. With volume
//! density `φ ψ^{n-1}` and `m = n − 1`,
//!
//! ```text
//! |f dx|_g   = |f| / φ
//! δ(f dx)    = −(φ ψ^m)⁻¹ D(ψ^m f / φ)
//! Δ_d(f dx)  = D[(φ ψ^m)⁻¹ D(ψ^m f / φ)] dx
//! ```
//!
//! and the comass of the class with period `P` is exactly `|P| / ∮φ dx`:
//! `f = Pφ / ∮φ` attains it and every `S¹` fibre gives the matching lower bound.

use crate::error::{Error, Result};
use crate::flow::{warped_admissible_dt, warped_rate, FlowSystem, FormFields};
use crate::geom::{Metric, WarpedMetric};

fn weight(m: &WarpedMetric) -> Vec<f64> {
    let e = (m.n() - 1) as i32;
    m.psi().iter().map(|p| p.powi(e)).collect()
}

/// `δ(f dx)`.
pub fn radial_codifferential(f: &[f64], m: &WarpedMetric) -> Vec<f64> {
    let w = weight(m);
    let inner: Vec<f64> = (0..f.len()).map(|i| w[i] * f[i] / m.phi()[i]).collect();
    m.grid()
        .d(&inner)
        .into_iter()
        .enumerate()
        .map(|(i, v)| -v / (m.phi()[i] * w[i]))
        .collect()
}

/// Coefficient of `Δ_d(f dx)` against `dx`.
pub fn radial_laplacian(f: &[f64], m: &WarpedMetric) -> Vec<f64> {
    let s = radial_codifferential(f, m);
    m.grid().d(&s).into_iter().map(|v| -v).collect()
}

pub fn radial_sup_norm(f: &[f64], m: &WarpedMetric) -> f64 {
    f.iter().zip(m.phi()).map(|(f, p)| f.abs() / p).fold(0.0, f64::max)
}

/// `∮ f dx` along an `S¹` fibre.
pub fn radial_period(f: &[f64], m: &WarpedMetric) -> f64 {
    m.grid().integrate(f)
}

/// Exact comass of the class with the given period.
pub fn radial_comass(period: f64, m: &WarpedMetric) -> f64 {
    period.abs() / m.circle_length()
}

/// Warped metric with a co-evolving radial form and its potential.
#[derive(Debug, Clone)]
pub struct CoupledWarped {
    pub metric: WarpedMetric,
    pub form: Vec<f64>,
    pub form0: Vec<f64>,
    pub potential: Vec<f64>,
}

impl CoupledWarped {
    pub fn new(metric: WarpedMetric, form0: Vec<f64>) -> Result<Self> {
        if form0.len() != metric.grid().n {
            return Err(Error::InvalidGrid(format!(
                "form has {} samples for {} nodes",
                form0.len(),
                metric.grid().n
            )));
        }
        crate::error::ensure_finite("f", &form0)?;
        Ok(Self {
            potential: vec![0.0; form0.len()],
            form: form0.clone(),
            form0,
            metric,
        })
    }
}

impl FlowSystem for CoupledWarped {
    fn pack(&self) -> Vec<f64> {
        let mut y = self.metric.pack();
        y.extend_from_slice(&self.form);
        y.extend_from_slice(&self.potential);
        y
    }

    fn unpack(&self, mut y: Vec<f64>) -> Self {
        let n = self.form0.len();
        let potential = y.split_off(3 * n);
        let form = y.split_off(2 * n);
        Self {
            metric: self.metric.unpack(y),
            form,
            form0: self.form0.clone(),
            potential,
        }
    }

    fn rate(&self) -> Vec<f64> {
        let (a, b) = warped_rate(&self.metric);
        let mut out = a;
        out.extend(b);
        out.extend(radial_laplacian(&self.form, &self.metric));
        let df = self.metric.grid().d(&self.potential);
        let total: Vec<f64> = self.form0.iter().zip(&df).map(|(a, b)| a + b).collect();
        out.extend(radial_codifferential(&total, &self.metric).into_iter().map(|v| -v));
        out
    }

    fn admissible_dt(&self) -> f64 {
        warped_admissible_dt(&self.metric)
    }

    fn metric(&self) -> Metric {
        Metric::Warped(self.metric.clone())
    }

    fn radius_min(&self) -> Option<f64> {
        Some(self.metric.psi_min())
    }

    fn carried(&self) -> Option<FormFields> {
        Some(FormFields {
            components: vec![self.form.clone()],
            potential: self.potential.clone(),
        })
    }
}
