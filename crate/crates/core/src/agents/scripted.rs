use crate::beliefs::SmootherState;
use crate::error::{contract, Result};
use crate::tabular::{ActionId, AgentRng, Experience, StateId};

use super::Agent;

/// Tit-for-tat: cooperate first, then repeat the opponent's previous move.
#[derive(Debug, Clone, Default)]
pub struct TftAgent {
    last_opponent_action: Option<ActionId>,
}

impl TftAgent {
    pub const COOPERATE: ActionId = 0;

    pub fn new() -> Self {
        Self::default()
    }
}

impl Agent for TftAgent {
    fn name(&self) -> String {
        "tft".into()
    }

    fn act(&self, _state: StateId, _rng: &mut AgentRng) -> Result<ActionId> {
        Ok(self.last_opponent_action.unwrap_or(Self::COOPERATE))
    }

    fn observe(&mut self, e: &Experience) -> Result<()> {
        e.validate()?;
        self.last_opponent_action = Some(e.opp_actions[0]);
        Ok(())
    }
}

/// Adversary that tracks the decision maker's choices with an exponential
/// smoother and acts on the least-preferred one.
#[derive(Debug, Clone)]
pub struct SmootherAdversary {
    st: SmootherState,
}

impl SmootherAdversary {
    pub fn new(choices: usize, beta: f64) -> Result<Self> {
        Ok(Self {
            st: SmootherState::new(choices, beta)?,
        })
    }

    pub fn state(&self) -> &SmootherState {
        &self.st
    }
}

impl Agent for SmootherAdversary {
    fn name(&self) -> String {
        "smoother".into()
    }

    fn act(&self, _state: StateId, _rng: &mut AgentRng) -> Result<ActionId> {
        Ok(self.st.argmin())
    }

    fn observe(&mut self, _e: &Experience) -> Result<()> {
        Ok(())
    }

    fn observe_choice(&mut self, signal: &[f64]) -> Result<()> {
        self.st.update_with(signal)
    }
}

/// Always plays the same action.
#[derive(Debug, Clone)]
pub struct ConstantAgent {
    action: ActionId,
    actions: usize,
}

impl ConstantAgent {
    pub fn new(action: ActionId, actions: usize) -> Result<Self> {
        if action >= actions {
            return Err(contract(format!("constant action {action} out of range")));
        }
        Ok(Self { action, actions })
    }
}

impl Agent for ConstantAgent {
    fn name(&self) -> String {
        format!("constant{}of{}", self.action, self.actions)
    }

    fn act(&self, _state: StateId, _rng: &mut AgentRng) -> Result<ActionId> {
        Ok(self.action)
    }

    fn observe(&mut self, _e: &Experience) -> Result<()> {
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;

    proptest! {
        #[test]
        fn tft_is_the_formal_map(stream in prop::collection::vec(0usize..2, 0..100)) {
            let mut tft = TftAgent::new();
            let mut rng = AgentRng::seed_from_u64(0);
            for (t, b) in stream.iter().enumerate() {
                let expected = if t == 0 { 0 } else { stream[t - 1] };
                prop_assert_eq!(tft.act(0, &mut rng).unwrap(), expected);
                // TFT sits in the adversary seat: its opponent is the decision maker.
                let e = Experience {
                    state: 0,
                    dm_action: 0,
                    opp_actions: vec![*b],
                    reward_dm: 0.0,
                    reward_opp: vec![0.0],
                    next_state: 0,
                    terminal: false,
                };
                tft.observe(&e).unwrap();
            }
        }
    }

    #[test]
    fn smoother_targets_the_least_visited_choice() {
        let mut adv = SmootherAdversary::new(2, 0.8).unwrap();
        let mut rng = AgentRng::seed_from_u64(0);
        assert_eq!(adv.act(0, &mut rng).unwrap(), 0);
        adv.observe_choice(&[1.0, 0.0]).unwrap();
        assert_eq!(adv.act(0, &mut rng).unwrap(), 1);
    }
}
