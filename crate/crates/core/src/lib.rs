//! Bootstrap percolation on finite squares: closure for the standard and
//! modified rules, exact enumeration oracles, the corner/jog growth
//! mechanisms, evaluators for the rigorous bounds, and Monte Carlo
//! estimators with reproducible parallel streams.

pub mod bounds;
pub mod error;
pub mod estimator;
pub mod lattice;
pub mod mechanisms;
pub mod oracle;
pub mod rng;

pub use error::{Error, Result};
pub use lattice::{Config, ModelKind, Rect};

/// Library version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
