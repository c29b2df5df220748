//! The agent zoo. Learners and scripted adversaries share the [`Agent`]
//! interface; every agent sees transitions from its own seat.

mod fpq;
mod levelk;
mod scripted;
mod wolf;

pub use fpq::{FpqAgent, IndependentQAgent, MultiFpqAgent};
pub use levelk::{LevelKAgent, LevelKSpec, MixtureAgent, Reasoner};
pub use scripted::{ConstantAgent, SmootherAdversary, TftAgent};
pub use wolf::{WolfConfig, WolfPhcAgent};

use crate::error::{config, Result};
use crate::tabular::{argmax_first, ActionId, AgentRng, Experience, PolicyDistribution, StateId};

pub trait Agent: Send {
    fn name(&self) -> String;

    fn act(&self, state: StateId, rng: &mut AgentRng) -> Result<ActionId>;

    /// Learns from one transition, already expressed from this agent's seat.
    fn observe(&mut self, e: &Experience) -> Result<()>;

    /// Side channel for adversaries that track the decision maker's choices
    /// rather than her raw actions (see `Environment::choice_signal`).
    fn observe_choice(&mut self, _signal: &[f64]) -> Result<()> {
        Ok(())
    }

    fn end_episode(&mut self) {}

    /// Current exploration rate; zero for agents that do not explore.
    fn epsilon(&self) -> f64 {
        0.0
    }

    /// Posterior weights over opponent models, for mixture agents.
    fn mixture_weights(&self) -> Option<Vec<f64>> {
        None
    }

    /// The agent's current belief over its opponents' actions at `state`.
    fn belief(&self, _state: StateId) -> Option<PolicyDistribution> {
        None
    }
}

/// Where a strategic model gets the modelled opponent's reward from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OpponentReward {
    /// Use the reward the environment reports for the opponent.
    Observed,
    /// Assume a zero-sum game, `r_B = -r_A`.
    ZeroSum,
}

impl OpponentReward {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "observed" => Ok(Self::Observed),
            "zero-sum" | "negate" | "minimax" => Ok(Self::ZeroSum),
            other => Err(config(format!("unknown opponent reward rule `{other}`"))),
        }
    }

    pub fn of(self, e: &Experience) -> f64 {
        match self {
            Self::Observed => e.reward_opp[0],
            Self::ZeroSum => -e.reward_dm,
        }
    }
}

/// What a strategic agent's opponent models get to see.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OpponentView {
    /// Every transition, in the decision maker's own state space.
    #[default]
    Step,
    /// One stateless round per episode: the opponent's action against the
    /// decision maker's final choice among `choices`, as reported through
    /// the choice signal. Suits adversaries that commit once per episode.
    Episode { choices: usize },
}

/// Turns the decision maker's transitions into the opponent model's.
#[derive(Debug, Clone, Default)]
pub(crate) struct ModelFeed {
    view: OpponentView,
    choice: Option<ActionId>,
}

impl ModelFeed {
    pub(crate) fn new(view: OpponentView) -> Self {
        Self { view, choice: None }
    }

    pub(crate) fn note_choice(&mut self, signal: &[f64]) {
        if matches!(self.view, OpponentView::Episode { .. }) {
            self.choice = Some(argmax_first(signal));
        }
    }

    /// The state in which the model is queried when the agent sits in `s`.
    pub(crate) fn state(&self, s: StateId) -> StateId {
        match self.view {
            OpponentView::Step => s,
            OpponentView::Episode { .. } => 0,
        }
    }

    /// The transition the model should learn from, if any.
    pub(crate) fn feed(&mut self, e: &Experience, reward_opp: f64) -> Option<Experience> {
        match self.view {
            OpponentView::Step => Some(e.swapped(0, reward_opp)),
            OpponentView::Episode { .. } => {
                if !e.terminal {
                    return None;
                }
                let choice = self.choice.take()?;
                Some(Experience {
                    state: 0,
                    dm_action: e.opp_actions[0],
                    opp_actions: vec![choice],
                    reward_dm: reward_opp,
                    reward_opp: vec![e.reward_dm],
                    next_state: 0,
                    terminal: true,
                })
            }
        }
    }
}
