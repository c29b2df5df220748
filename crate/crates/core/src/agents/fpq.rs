use crate::beliefs::ActionBelief;
use crate::error::{contract, Result};
use crate::tabular::{
    max_of, q3_update, select_action, td_update, ActionId, AgentConfig, AgentRng, EpsilonSchedule,
    Experience, PolicyDistribution, QTensor, StateId,
};

use super::Agent;

/// Opponent-unaware Q-learner over `(state, own action)`.
#[derive(Debug, Clone)]
pub struct IndependentQAgent {
    q: QTensor,
    cfg: AgentConfig,
    schedule: EpsilonSchedule,
}

impl IndependentQAgent {
    pub fn new(actions: usize, cfg: AgentConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            q: QTensor::new(actions, 1, cfg.initial_q),
            schedule: EpsilonSchedule::new(&cfg),
            cfg,
        })
    }

    pub fn values(&self, s: StateId) -> Vec<f64> {
        (0..self.q.dm_actions())
            .map(|a| self.q.get(s, a, 0))
            .collect()
    }
}

impl Agent for IndependentQAgent {
    fn name(&self) -> String {
        "q".into()
    }

    fn act(&self, state: StateId, rng: &mut AgentRng) -> Result<ActionId> {
        select_action(
            &self.values(state),
            self.cfg.policy(self.schedule.epsilon()),
            rng,
        )
    }

    fn observe(&mut self, e: &Experience) -> Result<()> {
        let bootstrap = if e.terminal {
            0.0
        } else {
            max_of(&self.values(e.next_state))
        };
        let old = self.q.get(e.state, e.dm_action, 0);
        let target = e.reward_dm + self.cfg.gamma * bootstrap;
        self.q.set(
            e.state,
            e.dm_action,
            0,
            (1.0 - self.cfg.alpha) * old + self.cfg.alpha * target,
        );
        Ok(())
    }

    fn end_episode(&mut self) {
        self.schedule.end_episode();
    }

    fn epsilon(&self) -> f64 {
        self.schedule.epsilon()
    }
}

/// Fictitious-play Q-learner: `Q(s, a, b)` plus a frequency model of the opponent.
#[derive(Debug, Clone)]
pub struct FpqAgent {
    q: QTensor,
    belief: ActionBelief,
    cfg: AgentConfig,
    schedule: EpsilonSchedule,
}

impl FpqAgent {
    pub fn new(dm_actions: usize, belief: ActionBelief, cfg: AgentConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            q: QTensor::new(dm_actions, belief.actions(), cfg.initial_q),
            belief,
            schedule: EpsilonSchedule::new(&cfg),
            cfg,
        })
    }

    pub fn q(&self) -> &QTensor {
        &self.q
    }

    pub fn q_mut(&mut self) -> &mut QTensor {
        &mut self.q
    }

    pub fn opponent_belief(&self) -> &ActionBelief {
        &self.belief
    }

    pub fn config(&self) -> &AgentConfig {
        &self.cfg
    }

    /// Expected utility of each own action under the current belief.
    pub fn values(&self, s: StateId) -> Result<Vec<f64>> {
        let p = self.belief.predict(s)?;
        self.q.expected_values(s, &p)
    }
}

impl Agent for FpqAgent {
    fn name(&self) -> String {
        "fpq".into()
    }

    fn act(&self, state: StateId, rng: &mut AgentRng) -> Result<ActionId> {
        select_action(
            &self.values(state)?,
            self.cfg.policy(self.schedule.epsilon()),
            rng,
        )
    }

    fn observe(&mut self, e: &Experience) -> Result<()> {
        e.validate()?;
        self.belief.observe(e.state, e.opp_actions[0])?;
        let next = self.belief.predict(e.next_state)?;
        q3_update(&mut self.q, e, &next, &self.cfg)?;
        Ok(())
    }

    fn end_episode(&mut self) {
        self.schedule.end_episode();
    }

    fn epsilon(&self) -> f64 {
        self.schedule.epsilon()
    }

    fn belief(&self, state: StateId) -> Option<PolicyDistribution> {
        self.belief.predict(state).ok()
    }
}

/// Fictitious-play learner facing several conditionally independent adversaries.
///
/// The Q table is indexed by the joint adversary action, flattened with the
/// last adversary varying fastest, and the joint belief is the product of
/// the per-adversary beliefs.
#[derive(Debug, Clone)]
pub struct MultiFpqAgent {
    q: QTensor,
    beliefs: Vec<ActionBelief>,
    cfg: AgentConfig,
    schedule: EpsilonSchedule,
}

impl MultiFpqAgent {
    pub fn new(dm_actions: usize, beliefs: Vec<ActionBelief>, cfg: AgentConfig) -> Result<Self> {
        cfg.validate()?;
        if beliefs.is_empty() {
            return Err(contract("at least one adversary belief is required"));
        }
        let joint = beliefs.iter().map(ActionBelief::actions).product();
        Ok(Self {
            q: QTensor::new(dm_actions, joint, cfg.initial_q),
            beliefs,
            schedule: EpsilonSchedule::new(&cfg),
            cfg,
        })
    }

    pub fn q_mut(&mut self) -> &mut QTensor {
        &mut self.q
    }

    /// Flattened index of a joint adversary action.
    pub fn joint_index(&self, actions: &[ActionId]) -> Result<usize> {
        if actions.len() != self.beliefs.len() {
            return Err(contract(format!(
                "{} adversary actions for {} adversaries",
                actions.len(),
                self.beliefs.len()
            )));
        }
        let mut index = 0;
        for (b, belief) in actions.iter().zip(&self.beliefs) {
            if *b >= belief.actions() {
                return Err(contract(format!("adversary action {b} out of range")));
            }
            index = index * belief.actions() + b;
        }
        Ok(index)
    }

    pub fn joint_belief(&self, s: StateId) -> Result<PolicyDistribution> {
        let factors = self
            .beliefs
            .iter()
            .map(|b| b.predict(s))
            .collect::<Result<Vec<_>>>()?;
        Ok(PolicyDistribution::product(&factors))
    }

    pub fn values(&self, s: StateId) -> Result<Vec<f64>> {
        self.q.expected_values(s, &self.joint_belief(s)?)
    }
}

impl Agent for MultiFpqAgent {
    fn name(&self) -> String {
        "multi-fpq".into()
    }

    fn act(&self, state: StateId, rng: &mut AgentRng) -> Result<ActionId> {
        select_action(
            &self.values(state)?,
            self.cfg.policy(self.schedule.epsilon()),
            rng,
        )
    }

    fn observe(&mut self, e: &Experience) -> Result<()> {
        e.validate()?;
        let b = self.joint_index(&e.opp_actions)?;
        for (belief, action) in self.beliefs.iter_mut().zip(&e.opp_actions) {
            belief.observe(e.state, *action)?;
        }
        let next = self.joint_belief(e.next_state)?;
        td_update(
            &mut self.q,
            e.state,
            e.dm_action,
            b,
            e.reward_dm,
            e.next_state,
            e.terminal,
            &next,
            self.cfg.alpha,
            self.cfg.gamma,
        )?;
        Ok(())
    }

    fn end_episode(&mut self) {
        self.schedule.end_episode();
    }

    fn epsilon(&self) -> f64 {
        self.schedule.epsilon()
    }

    fn belief(&self, state: StateId) -> Option<PolicyDistribution> {
        self.joint_belief(state).ok()
    }
}
