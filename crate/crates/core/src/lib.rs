//! Interference mitigation for dechirped FMCW radar.
//!
//! A sweep contaminated by other radars is modeled as a sum of beat tones
//! (low rank once Hankel-lifted) plus short chirp bursts (sparse in time) plus
//! noise. [`sparkle::solve`] separates the two with an SVD-free ADMM scheme on
//! a factored nuclear norm; [`rpca::rpca_solve`] is the classic RPCA
//! comparison. [`sim`] synthesizes scenarios, [`metrics`] scores results and
//! [`harness`] drives whole experiments with file-based I/O.

pub mod error;
pub mod hankel;
pub mod harness;
pub mod io;
pub mod metrics;
pub mod rpca;
pub mod sim;
pub mod signal;
pub mod sparkle;
mod serde_db;

pub use error::{Error, Result};
pub use hankel::{ComplexMatrix, HankelShape, UnliftMode};
pub use signal::ComplexSignal;
pub use sim::{FmcwScenario, InterfererSpec, SweepDirection, TargetSpec};
pub use sparkle::{SolverParams, SolverResult, SolverState};
