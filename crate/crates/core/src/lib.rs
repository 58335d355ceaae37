//! Energy-aware utility-optimal scheduling for multihop networks whose nodes
//! run on harvested energy.

pub mod engine;
pub mod environment;
pub mod error;
pub mod esa;
pub mod mesa;
pub mod oracle;
pub mod model;
pub mod queues;
pub mod scenarios;

pub use engine::{run, sweep, Metrics, Policy, RunOptions};
pub use error::{Error, Result, Violation, ViolationKind};
pub use model::{Commodity, Network, SystemParams};
