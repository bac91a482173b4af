//! Dependability analytics for industrial wireless systems.
//!
//! Everything in this crate is a pure function of immutable inputs:
//!
//! - [`FailureModel`]: Weibull lifetimes with reliability and hazard evaluation
//! - [`AvailabilityRecord`]: steady-state availability from mean up/down times
//! - [`StructureModel`]: series/parallel/k-of-n reliability block diagrams
//! - [`FaultTree`]: AND/OR fault trees, and the RBD to fault-tree dual
//! - [`MarkovAvailabilityModel`]: steady-state and transient availability of
//!   continuous-time Markov chains (transient via uniformization)
//! - [`RedundantPathSet`]: delivery probability and first-arrival latency of
//!   frames replicated over independent paths
//! - [`description`]: a line-oriented system description format that
//!   declares any of the above and evaluates them to metric rows
//!
//! Markov models are the right tool only when combinatorial methods do not
//! suffice. Prefer RBD/FTA when components fail independently and the
//! system is static; switch to simulation when the state space is large,
//! the behaviour is not Markovian, or detailed performance estimates are
//! needed.

pub mod availability;
pub mod description;
mod error;
pub mod failure;
pub mod fault_tree;
pub mod frer;
pub mod markov;
mod prob;
pub mod structure;

pub use availability::{steady_state_availability, AvailabilityRecord};
pub use error::DependabilityError;
pub use failure::FailureModel;
pub use fault_tree::{fta_top_event, rbd_to_fault_tree, FaultTree};
pub use frer::{frer_delivery, frer_latency, DelayedPath, LatencyProfile, RedundantPathSet};
pub use markov::{markov_steady_state, markov_transient, MarkovAvailabilityModel, MarkovState, StateDistribution};
pub use structure::{rbd_reliability, Block, ReliabilityLookup, StructureModel};

pub type Result<T> = std::result::Result<T, DependabilityError>;

/// Maximum number of shared components (or repeated basic events) that are
/// resolved by conditioning. Each one doubles the evaluation cost.
pub const MAX_SHARED: usize = 20;
