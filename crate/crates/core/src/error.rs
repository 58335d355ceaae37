use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors produced while loading configurations, simulating, or bounding.
#[derive(Debug, Error)]
pub enum Error {
    /// The configuration text could not be parsed.
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),

    /// A parsed configuration failed validation. `field` names the offending key.
    #[error("invalid config field `{field}`: {message}")]
    Config { field: String, message: String },

    /// An argument to an operation was outside its domain.
    #[error("invalid argument `{name}`: {message}")]
    Argument { name: String, message: String },

    /// A run broke one of the deterministic per-slot guarantees.
    #[error("invariant violated: {0}")]
    Invariant(Violation),

    /// An enumeration-based routine was handed an instance above its size cap.
    #[error("instance too large: {what} = {size} exceeds cap {cap}")]
    TooLarge { what: String, size: usize, cap: usize },

    /// The linear-program oracle failed.
    #[error("linear program failed: {0}")]
    Lp(String),

    /// A run inside a sweep failed.
    #[error("run with V = {v}, seed = {seed} failed: {source}")]
    Run {
        v: f64,
        seed: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serialize(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn argument(name: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Argument {
            name: name.into(),
            message: message.into(),
        }
    }

    /// True for errors that come from a run breaking a guarantee, as opposed
    /// to bad input.
    pub fn is_invariant(&self) -> bool {
        match self {
            Error::Invariant(_) => true,
            Error::Run { source, .. } => source.is_invariant(),
            _ => false,
        }
    }
}

/// Which guarantee was broken.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    /// Q[n][c] above βV + R_max, or negative.
    DataQueueBound,
    /// E[n] above θ_n + h_max, or negative.
    EnergyQueueBound,
    /// A node spent more power than it had stored.
    EnergyAvailability,
    /// A node spent nonzero power while holding less than P_max.
    SpendBelowPmax,
    /// Actual data queue above [Q̂ − 𝒬]⁺ + γ in the two-phase scheme.
    ActualDataBound,
    /// Actual energy below min([Ê − ℰ]⁺, M) in the two-phase scheme.
    ActualEnergyFloor,
    /// Actual energy outside [0, M].
    ActualEnergyCapacity,
}

/// A structured record of one broken invariant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub slot: u64,
    /// 1-based node id.
    pub node: usize,
    /// 1-based destination node id for data-queue violations.
    pub destination: Option<usize>,
    pub value: f64,
    pub bound: f64,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} at slot {} node {}", self.kind, self.slot, self.node)?;
        if let Some(d) = self.destination {
            write!(f, " destination {d}")?;
        }
        write!(f, ": value {} vs bound {}", self.value, self.bound)
    }
}
