//! Model-based state estimation for labeled exponential-rate automata.
//!
//! Between observations the belief evolves under the silent sub-generator
//! `q_u`; an observation of label `q` after `tau` silent time units maps a
//! belief `b` to `normalize(b * exp(q_u * tau) * r_q)`.

pub mod expm;
pub mod filter;
pub mod generators;
pub mod oracle;

pub use expm::{expm_action, expm_pade, expm_uniformized, NonConvergence};
pub use filter::{
    filter_observations, filter_ticks, observation_update, silent_propagate, FilterError,
    TickFilter,
};
pub use generators::GeneratorSet;
pub use oracle::{monte_carlo_posterior, OracleConfig, OracleError, OracleResult};
