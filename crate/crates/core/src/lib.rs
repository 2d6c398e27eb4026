//! k-stripping (peeling) of random uniform hypergraphs drawn from the
//! allocation-partition model.
//!
//! The crate covers the whole pipeline used to study the stripping process
//! near the k-core emergence threshold:
//!
//! * [`thresholds`]: Poisson tails, the threshold `c_{r,k}`, the critical
//!   constants and the `psi`/`theta` functions driving the drift of the
//!   light-degree mass.
//! * [`apmodel`]: configurations (points in bins, partitioned into r-tuples),
//!   samplers and degree diagnostics.
//! * [`peeling`]: the parallel stripping process and SLOW-STRIP with traces.
//! * [`depth`]: the stripping digraph, reachability and exact depth.
//! * [`coupling`]: the `H ⊆ H'` coupling and the slowed-down stripping.
//! * [`binprocess`]: the bins-only auxiliary process.
//! * [`lab`]: sweeps, scaling fits and SVG plots.

pub mod apmodel;
pub mod binprocess;
pub mod coupling;
pub mod depth;
mod error;
pub mod lab;
pub mod peeling;
pub mod thresholds;

pub use apmodel::{Configuration, DegreeStats};
pub use error::{Error, Result};
pub use peeling::{PeelResult, SlowTrace};
pub use thresholds::ThresholdConstants;
