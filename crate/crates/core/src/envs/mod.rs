//! Environments: repeated 2x2 matrix games, friend-or-foe (stateless and
//! spatial) and a multi-attacker Blotto allocation game.

mod blotto;
mod fof;
mod matrix;

pub use blotto::{blotto_rewards, Blotto, BlottoSpec};
pub use fof::{
    grid_step, stateless_fof_step, FofStateless, GridOutcome, GridWorld, GridWorldSpec, Move,
    RewardScaling,
};
pub use matrix::{MatrixGame, MatrixGameSpec, Memory, COOPERATE, DEFECT};

use crate::error::Result;
use crate::tabular::{ActionId, Experience, StateId};

/// A simultaneous-move environment driven by one decision maker and one or
/// more adversaries.
pub trait Environment: Send {
    /// The identifier used on the command line.
    fn id(&self) -> &'static str;

    fn dm_actions(&self) -> usize;

    /// Action-set size of each adversary.
    fn opp_actions(&self) -> Vec<usize>;

    /// Upper bound on state ids produced by this environment.
    fn n_states(&self) -> usize;

    /// Whether `reset` starts a fresh multi-step episode. Non-episodic
    /// environments treat every step as one episode for exploration decay.
    fn episodic(&self) -> bool;

    /// Whether `reward_opp` carries meaningful adversary rewards.
    fn emits_opponent_reward(&self) -> bool {
        true
    }

    fn reset(&mut self) -> StateId;

    fn step(&mut self, dm_action: ActionId, opp_actions: &[ActionId]) -> Result<Experience>;

    /// What a smoothing adversary absorbs after this transition, if anything:
    /// a distribution over the choices it tracks.
    fn choice_signal(&self, e: &Experience) -> Option<Vec<f64>>;

    /// Length of the vectors returned by `choice_signal`.
    fn signal_len(&self) -> usize;
}

pub(crate) fn onehot(n: usize, i: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[i] = 1.0;
    v
}
