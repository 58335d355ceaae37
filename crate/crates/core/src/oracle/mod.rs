//! Numeric upper bound on achievable utility for small instances, and a grid
//! brute force that cross-checks it.

mod brute;
mod fw;
pub mod region;
pub mod simplex;

pub use brute::brute_force_bound;
pub use fw::{compute_upper_bound, compute_upper_bound_with, OracleOptions, UpperBound, DEFAULT_TOLERANCE};
pub use region::AchievableRegion;
