//! Distributed dual coordinate ascent on tree networks.
//!
//! Solves regularized empirical risk minimization through its dual: leaves run
//! stochastic single-coordinate ascent on their local data block, internal
//! nodes merge child updates with aggregation weights `beta`, and the root
//! tracks the duality gap against a simulated communication-time budget.
//!
//! Modules:
//! - [`losses`]: loss families, conjugates, closed-form coordinate updates
//! - [`dataset`]: loading, normalization, leaf partitioning
//! - [`topology`]: tree construction, aggregation weights, iteration schedules
//! - [`engine`]: the solver (leaf SDCA + recursive weighted aggregation)
//! - [`analysis`]: convergence-rate calculators, Lambert W, rho_min
//! - [`harness`]: experiment configs, simulated time, trace CSV emission

pub mod analysis;
pub mod dataset;
pub mod engine;
pub mod error;
pub mod harness;
pub mod losses;
pub mod topology;

pub use error::{Error, Result};
