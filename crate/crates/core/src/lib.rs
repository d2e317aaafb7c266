//! Numerical laboratory for Ricci flow on conformal 2-tori and warped
//! products `S¹ × S^{n-1}`, with co-evolved 1-form heat flow, comass and
//! stable norms, and monitors for the monotone quantities they satisfy.

pub mod error;
pub mod flow;
pub mod geom;
pub mod grid;
pub mod hodge;
pub mod loops;
pub mod monitor;
pub mod optim;
pub mod scenario;

pub use error::{Error, Result};
pub use grid::{PeriodicGrid1, PeriodicGrid2};
