//! Parameter sweeps, power-law fits and claim verdicts.
//!
//! A sweep generates one workload per parameter point, runs the claim's job
//! and pulls named metrics out of the resulting [`ComplexityReport`]. A
//! verdict is a pure function of the stored series and the registry bands.
//!
//! [`ComplexityReport`]: crate::metrics::ComplexityReport

mod fit;
mod registry;
mod sweep;

use thiserror::Error;

pub use fit::{fit_power_law, max_min_ratio, span_decades, FitError, PowerLawFit};
pub use registry::{Check, ClaimEntry, ClaimId, Registry};
pub use sweep::{run_sweep, verify_claim, ScalingSeries, SweepResult, SweepSpec, Verdict};

#[derive(Debug, Error, PartialEq)]
pub enum ExperimentError {
    #[error("unknown claim {0:?} (expected C1..C8)")]
    UnknownClaim(String),
    #[error("invalid sweep for {claim}: {reason}")]
    Sweep { claim: ClaimId, reason: String },
    #[error("{claim} point {param}: {reason}")]
    Point { claim: ClaimId, param: u64, reason: String },
    #[error("{claim}: no series for metric {metric}")]
    MissingSeries { claim: ClaimId, metric: String },
    #[error(transparent)]
    Doc(#[from] crate::doc::DocError),
}
