//! Generation and analysis of time-bin photon-number entangled light from a
//! sequentially pulsed two-level emitter.
//!
//! The crate covers the full pipeline from state generation to estimator
//! output:
//!
//! - [`mps`] — ideal short-pulse states via the bond-2 matrix-product
//!   recursion, Fibonacci term counting, golden pulse schedules and W-state
//!   time-bin partitions.
//! - [`dynamics`] — finite-pulse physics: closed-form single- and two-pulse
//!   wavefunctions and photon-number probabilities, plus a discretized
//!   collision-model evolution used as an independent numerical oracle.
//! - [`correlations`] — deterministic two-time correlation maps
//!   (`N(t₁)N(t₂)`, `G⁽²⁾`, `|G⁽¹⁾|²`, `|C⁽²⁾|²`), pure-dephasing and
//!   detector-jitter effects, time-bin quadrant reduction, and the
//!   Hong-Ou-Mandel / self-homodyne observables.
//! - [`estimators`] — inversion of measured moments into photon-number
//!   probabilities, Bell-state fidelity estimates, partial density-matrix
//!   construction and concurrence via rejection sampling.
//! - [`timetags`] — Monte Carlo click-stream generation for HBT and
//!   Mach-Zehnder topologies and histogram reconstruction matching the
//!   experimental pipeline.
//!
//! Times are picoseconds and rates 1/ps throughout. All field amplitudes are
//! handled in the rotating frame, so the optical carrier never appears in a
//! computed quantity.

pub mod config;
pub mod correlations;
pub mod dynamics;
pub mod error;
pub mod estimators;
pub mod linalg;
pub mod mps;
pub mod timetags;
pub mod types;

pub use error::{Error, Result};
pub use types::{AtomParams, PhotonicState, PulseSequence, TimeBinPartition, TimeGrid};
