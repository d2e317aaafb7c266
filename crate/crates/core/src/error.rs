use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("non-finite value in `{field}` at node {index}")]
    NonFinite { field: &'static str, index: usize },

    #[error("`{field}` must be positive, found {value} at node {index}")]
    NonPositive {
        field: &'static str,
        index: usize,
        value: f64,
    },

    #[error("metric is not positive definite at {point:?}")]
    NotPositiveDefinite { point: Vec<f64> },

    #[error("oracle size cap exceeded: {0}")]
    OracleTooLarge(String),

    #[error("time step {requested} exceeds the admissible step {admissible}")]
    StepRejected { requested: f64, admissible: f64 },

    #[error("time {t} is at or past the vanishing time {vanishing}")]
    PastVanishingTime { t: f64, vanishing: f64 },

    #[error("dilation window [{requested_lo}, {requested_hi}] exceeds achievable [{achievable_lo}, {achievable_hi}]")]
    DilationWindow {
        requested_lo: f64,
        requested_hi: f64,
        achievable_lo: f64,
        achievable_hi: f64,
    },

    #[error("dilation base time {t_j} is not a snapshot time (nearest: {nearest})")]
    DilationBase { t_j: f64, nearest: f64 },

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("invalid loop: {0}")]
    InvalidLoop(String),

    #[error("lattice of {nodes} nodes exceeds the cap of {cap}; try refinement {suggested}")]
    LatticeTooLarge {
        nodes: usize,
        cap: usize,
        suggested: usize,
    },

    #[error("invalid class: {0}")]
    InvalidClass(String),

    #[error("field expression: {0}")]
    Expression(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("serialization: {0}")]
    Serialization(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serialization(e.to_string())
    }
}

/// Rejects the first non-finite entry of `values`.
pub(crate) fn ensure_finite(field: &'static str, values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(Error::NonFinite { field, index }),
        None => Ok(()),
    }
}

pub(crate) fn ensure_positive(field: &'static str, values: &[f64]) -> Result<()> {
    ensure_finite(field, values)?;
    match values.iter().position(|&v| v <= 0.0) {
        Some(index) => Err(Error::NonPositive {
            field,
            index,
            value: values[index],
        }),
        None => Ok(()),
    }
}

impl Error {
    /// Whether the error stems from user input rather than the numerics.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_) | Error::Expression(_))
    }
}
