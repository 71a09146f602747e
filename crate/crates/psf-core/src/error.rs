use thiserror::Error;

/// Errors produced by model evaluation, solving, simulation, and I/O.
#[derive(Debug, Error)]
pub enum Error {
    /// A physical quantity was outside its admissible range.
    #[error("{what} = {value} outside [{lo}, {hi}]")]
    OutOfRange {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    /// Parameters violate a structural invariant.
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    /// The excursion demands more sliding-block travel than the SEA allows
    /// even at full flexion; carries the clamped saturation state.
    #[error("SEA saturated at x = {x} mm (dx_sb would exceed x_sb_max)")]
    Saturated { x: f64, clamped: crate::params::FingerState },

    /// Empty or contradictory feasible set for the quasi-static step.
    #[error("infeasible constraint set: {0}")]
    Infeasible(String),

    /// A query fell outside the reference trajectory's excursion range.
    #[error("excursion {x} mm outside reference range [{lo}, {hi}]")]
    OutOfReference { x: f64, lo: f64, hi: f64 },

    /// Detector produced contradictory events (fault state).
    #[error("detector fault: {0}")]
    DetectorFault(String),

    /// Posture requested while at least one finger is still reaching.
    #[error("posture not ready: finger {0} still reaching")]
    NotReady(String),

    /// No distal contact on any finger; feature extraction impossible.
    #[error("no grasp: no finger reports distal contact")]
    NoGrasp,

    /// Classification requested on an empty dataset.
    #[error("empty dataset")]
    EmptyDataset,

    /// Configuration or scenario file problem.
    #[error("config error: {0}")]
    Config(String),

    /// Malformed CSV/JSON artifact.
    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        // The csv reporter already names the record/line; keep its message.
        Error::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
