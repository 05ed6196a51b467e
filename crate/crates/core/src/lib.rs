//! Quarter-car and half-car suspension simulation with ISO 2631 weighted
//! ride-comfort metrics, handling metrics and box-constrained optimization
//! of spring/damper characteristic scaling coefficients.

pub mod analysis;
pub mod characteristics;
pub mod comfort;
pub mod error;
pub mod io;
pub mod objectives;
pub mod optimizer;
pub mod rng;
pub mod road;
pub mod simulate;
pub mod vehicle;

pub use error::{Error, Result};
