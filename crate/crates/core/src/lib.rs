//! Probabilistic current-state estimation for timed probabilistic discrete
//! event systems.
//!
//! The pipeline: simulate timed runs from a labeled timed probabilistic
//! automaton ([`simulator`]), format them into supervised samples
//! ([`preprocess`]), train a feed-forward network that outputs a state
//! probability vector ([`fnn`]), and compare it with an analytical
//! continuous-time filter that is itself checked by Monte Carlo ([`mbse`],
//! [`eval`]).
//!
//! Numerical code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix the precision used by the pipeline and the CLI.

pub mod belief;
pub mod deploy;
pub mod eval;
pub mod fnn;
pub mod linalg;
pub mod mbse;
pub mod model;
pub mod pipeline;
pub mod preprocess;
pub mod provenance;
pub mod run;
pub mod scalar;
pub mod simulator;
pub mod ticks;

#[cfg(test)]
pub(crate) mod testutil;

pub use belief::{Belief, BeliefError};
pub use model::{class_onehot, validate_model, LtpaModel, ModelError, ModelFile, StateId};
pub use run::{derive_sojourns, project_run, validate_run, TimedObservationSeq, TimedRun};
pub use scalar::Scalar;
pub use ticks::TickGrid;

pub type Belief64 = Belief<f64>;
pub type Belief32 = Belief<f32>;
pub type Network64 = fnn::Network<f64>;
pub type Network32 = fnn::Network<f32>;
pub type GeneratorSet64 = mbse::GeneratorSet<f64>;
pub type GeneratorSet32 = mbse::GeneratorSet<f32>;
pub type Matrix64 = linalg::Matrix<f64>;
pub type Matrix32 = linalg::Matrix<f32>;
