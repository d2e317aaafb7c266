use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{FlowConfig, FlowSystem};
use crate::error::{Error, Result};
use crate::geom::Metric;

/// Fixed leading CSV columns; monitor columns follow in name order.
pub const DIAGNOSTIC_COLUMNS: [&str; 6] = ["t", "r_min", "r_max", "sup_rm", "size", "radius_min"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "cause", rename_all = "snake_case")]
pub enum Termination {
    Completed,
    SingularityImminent { t: f64, radius: f64 },
}

impl Termination {
    pub fn is_singular(&self) -> bool {
        matches!(self, Self::SingularityImminent { .. })
    }
}

/// Form data carried through a coupled run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormFields {
    /// `[p, q]` on the torus, `[f]` for a radial form on a warped product.
    pub components: Vec<Vec<f64>>,
    /// Gauge function with `φ(t) = φ₀ + dF(t)`.
    pub potential: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub t: f64,
    pub metric: Metric,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub form: Option<FormFields>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticRow {
    pub t: f64,
    pub r_min: f64,
    pub r_max: f64,
    pub sup_rm: f64,
    /// Area (torus) or `S¹` fibre length (warped).
    pub size: f64,
    pub radius_min: Option<f64>,
}

impl DiagnosticRow {
    pub fn of(t: f64, metric: &Metric) -> Self {
        let c = metric.curvature();
        Self {
            t,
            r_min: c.scalar_min(),
            r_max: c.scalar_max(),
            sup_rm: c.sup_rm(),
            size: metric.size(),
            radius_min: metric.as_warped().map(|m| m.psi_min()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowTrace {
    pub config: FlowConfig,
    pub snapshots: Vec<Snapshot>,
    pub diagnostics: Vec<DiagnosticRow>,
    pub termination: Termination,
    /// Final time: `t_end` for complete runs, extrapolated vanishing time otherwise.
    pub t_num: f64,
    pub steps: usize,
    pub dt_min: Option<f64>,
    pub dt_max: Option<f64>,
    /// Monitor-supplied per-snapshot columns.
    #[serde(default)]
    pub columns: BTreeMap<String, Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct TraceFile {
    family: String,
    dim: usize,
    columns: Vec<String>,
    trace: FlowTrace,
}

impl FlowTrace {
    pub(crate) fn new(config: FlowConfig) -> Self {
        Self {
            config,
            snapshots: Vec::new(),
            diagnostics: Vec::new(),
            termination: Termination::Completed,
            t_num: 0.0,
            steps: 0,
            dt_min: None,
            dt_max: None,
            columns: BTreeMap::new(),
        }
    }

    /// Builds a trace from snapshots, recomputing every diagnostic row.
    pub fn from_snapshots(
        config: FlowConfig,
        snapshots: Vec<Snapshot>,
        termination: Termination,
        t_num: f64,
    ) -> Self {
        let diagnostics = snapshots.iter().map(|s| DiagnosticRow::of(s.t, &s.metric)).collect();
        Self {
            config,
            snapshots,
            diagnostics,
            termination,
            t_num,
            steps: 0,
            dt_min: None,
            dt_max: None,
            columns: BTreeMap::new(),
        }
    }

    pub(crate) fn push<S: FlowSystem>(&mut self, t: f64, s: &S) {
        if self.snapshots.last().is_some_and(|l| l.t == t) {
            return;
        }
        let metric = s.metric();
        self.diagnostics.push(DiagnosticRow::of(t, &metric));
        self.snapshots.push(Snapshot {
            t,
            metric,
            form: s.carried(),
        });
    }

    pub(crate) fn note_step(&mut self, dt: f64) {
        self.dt_min = Some(self.dt_min.map_or(dt, |m| m.min(dt)));
        self.dt_max = Some(self.dt_max.map_or(dt, |m| m.max(dt)));
    }

    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.t).collect()
    }

    pub fn family(&self) -> &'static str {
        self.snapshots.first().map_or("empty", |s| s.metric.family())
    }

    pub fn dim(&self) -> usize {
        self.snapshots.first().map_or(0, |s| s.metric.dim())
    }

    pub fn initial(&self) -> &Snapshot {
        &self.snapshots[0]
    }

    pub fn last(&self) -> &Snapshot {
        self.snapshots.last().expect("trace has an initial snapshot")
    }

    pub fn set_column(&mut self, name: &str, values: Vec<f64>) -> Result<()> {
        if values.len() != self.snapshots.len() {
            return Err(Error::Config(format!(
                "column `{name}` has {} values for {} snapshots",
                values.len(),
                self.snapshots.len()
            )));
        }
        self.columns.insert(name.to_string(), values);
        Ok(())
    }

    /// Checks that times increase strictly and every snapshot is finite.
    pub fn validate(&self) -> Result<()> {
        if self.snapshots.is_empty() {
            return Err(Error::Serialization("trace has no snapshots".into()));
        }
        for w in self.snapshots.windows(2) {
            if !(w[1].t > w[0].t) {
                return Err(Error::Serialization(format!(
                    "snapshot times not increasing at t = {}",
                    w[1].t
                )));
            }
        }
        for s in &self.snapshots {
            match &s.metric {
                Metric::Torus(m) => crate::error::ensure_finite("u", m.u())?,
                Metric::Warped(m) => {
                    crate::error::ensure_positive("phi", m.phi())?;
                    crate::error::ensure_positive("psi", m.psi())?;
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        let file = TraceFile {
            family: self.family().to_string(),
            dim: self.dim(),
            columns: self.csv_header(),
            trace: self.clone(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: TraceFile = serde_json::from_str(text)?;
        file.trace.validate()?;
        Ok(file.trace)
    }

    fn csv_header(&self) -> Vec<String> {
        DIAGNOSTIC_COLUMNS
            .iter()
            .map(|s| s.to_string())
            .chain(self.columns.keys().cloned())
            .collect()
    }

    /// One row per snapshot; columns as in [`DIAGNOSTIC_COLUMNS`] then monitor columns.
    pub fn to_csv(&self) -> String {
        let mut out = self.csv_header().join(",");
        out.push('\n');
        for (k, d) in self.diagnostics.iter().enumerate() {
            let radius = d.radius_min.map(|r| r.to_string()).unwrap_or_default();
            let _ = write!(out, "{},{},{},{},{},{}", d.t, d.r_min, d.r_max, d.sup_rm, d.size, radius);
            for col in self.columns.values() {
                let _ = write!(out, ",{}", col[k]);
            }
            out.push('\n');
        }
        out
    }

    /// Writes `<stem>.json` and `<stem>.csv` into `dir`.
    pub fn write(&self, dir: &Path, stem: &str) -> Result<(PathBuf, PathBuf)> {
        let io = |e: std::io::Error| Error::Serialization(e.to_string());
        std::fs::create_dir_all(dir).map_err(io)?;
        let json = dir.join(format!("{stem}.json"));
        let csv = dir.join(format!("{stem}.csv"));
        std::fs::write(&json, self.to_json()?).map_err(io)?;
        std::fs::write(&csv, self.to_csv()).map_err(io)?;
        Ok((json, csv))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Serialization(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }
}
