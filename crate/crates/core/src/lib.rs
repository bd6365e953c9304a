//! Capacity-distortion tradeoff of a state-dependent two-user multiple-access
//! channel with generalized feedback.
//!
//! The crate evaluates the rate expressions of the layered (block-Markov)
//! achievable scheme and of the dependence-balance outer bound, derives
//! optimal per-symbol state estimators and their cost tables, and optimizes
//! all of it over the binary erasure MAC with binary states
//! (`Y = S1 X1 + S2 X2`, output feedback `Z1 = Z2 = Y`).
//!
//! Every closed-form expression has a brute-force counterpart computed from
//! an explicit [`prob::JointPmf`]; the brute-force path is the one the
//! optimizers consume.

pub mod channel;
pub mod config;
pub mod error;
pub mod estimation;
pub mod montecarlo;
pub mod optimize;
pub mod prob;
pub mod regions;

pub use error::{Error, Result};
