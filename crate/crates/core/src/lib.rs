//! Exact and approximate planning for finite partially observed systems.
//!
//! The crate builds approximate information states (AIS) for tabular POMDPs,
//! measures their `(ε, δ)` quality under integral probability metrics, computes
//! the resulting value and policy error bounds and checks them against exact
//! dynamic programming over histories. A small tabular learner trains an AIS and
//! a policy from simulated interaction.
//!
//! Total variation is the un-halved `Σ|p − q|` everywhere in this crate.

pub mod ais;
pub mod envs;
pub mod error;
pub mod metrics;
pub mod model;
pub mod planning;
pub mod porl;

pub use error::{Error, Result};
pub use model::{History, PomdpModel, ProbVector, Step};
