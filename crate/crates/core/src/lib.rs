//! Tabular learners for threatened Markov decision processes: a decision
//! maker plays against adversaries whose behaviour it models explicitly.

pub mod agents;
pub mod beliefs;
pub mod envs;
pub mod error;
pub mod harness;
pub mod tabular;
pub mod verify;

pub use error::{Error, Result};
pub use tabular::{ActionId, AgentRng, PolicyDistribution, StateId};
