//! Level-k reasoning and Bayesian averaging over opponent models.
//!
//! A level-k learner keeps its own `Q_k(s, a, b)` and a full level-(k-1)
//! learner sitting in the opponent's seat. Every transition is replayed to the
//! inner learner with roles swapped; the inner learner's epsilon-greedy policy
//! then serves as the belief `p(b | s')` in the outer update. The recursion
//! bottoms out at a fictitious-play learner (level 1) whose frequency model
//! of the other seat is the level-0 model.

use crate::beliefs::{BeliefKind, ModelMixture};
use crate::error::{config, contract, Result};
use crate::tabular::{
    argmax_first, policy_from_values, q3_update, select_action, ActionId, AgentConfig, AgentRng,
    EpsilonSchedule, Experience, PolicyDistribution, QTensor, StateId,
};

use super::{Agent, FpqAgent, ModelFeed, OpponentReward, OpponentView};

/// A learner used as a model of another player.
#[derive(Debug, Clone)]
#[allow(clippy::large_enum_variant)]
pub enum Reasoner {
    Fpq(FpqAgent),
    LevelK(Box<LevelKAgent>),
}

impl Reasoner {
    /// Builds a level-`level` learner with `own_actions` facing `opp_actions`.
    ///
    /// `cfg` configures this learner; every deeper level uses `inner_cfg`.
    pub fn build(
        level: usize,
        own_actions: usize,
        opp_actions: usize,
        cfg: &AgentConfig,
        inner_cfg: &AgentConfig,
        base_belief: BeliefKind,
        opp_reward: OpponentReward,
    ) -> Result<Self> {
        match level {
            0 => Err(config("reasoning level must be at least 1")),
            1 => Ok(Reasoner::Fpq(FpqAgent::new(
                own_actions,
                base_belief.build(opp_actions)?,
                cfg.clone(),
            )?)),
            _ => {
                cfg.validate()?;
                let inner = Reasoner::build(
                    level - 1,
                    opp_actions,
                    own_actions,
                    inner_cfg,
                    inner_cfg,
                    base_belief,
                    opp_reward,
                )?;
                Ok(Reasoner::LevelK(Box::new(LevelKAgent {
                    level,
                    q: QTensor::new(own_actions, opp_actions, cfg.initial_q),
                    schedule: EpsilonSchedule::new(cfg),
                    cfg: cfg.clone(),
                    inner,
                    opp_reward,
                    feed: ModelFeed::default(),
                })))
            }
        }
    }

    pub fn level(&self) -> usize {
        match self {
            Reasoner::Fpq(_) => 1,
            Reasoner::LevelK(k) => k.level,
        }
    }

    pub fn values(&self, s: StateId) -> Result<Vec<f64>> {
        match self {
            Reasoner::Fpq(a) => a.values(s),
            Reasoner::LevelK(k) => k.values(s),
        }
    }

    pub fn epsilon(&self) -> f64 {
        match self {
            Reasoner::Fpq(a) => a.epsilon(),
            Reasoner::LevelK(k) => k.schedule.epsilon(),
        }
    }

    /// The modelled player's epsilon-greedy policy at `s`.
    pub fn predicted_policy(&self, s: StateId) -> Result<PolicyDistribution> {
        policy_from_values(&self.values(s)?, self.epsilon())
    }

    /// The modelled player's greedy action, lowest index on ties.
    pub fn greedy(&self, s: StateId) -> Result<ActionId> {
        Ok(argmax_first(&self.values(s)?))
    }

    pub fn observe(&mut self, e: &Experience) -> Result<()> {
        match self {
            Reasoner::Fpq(a) => a.observe(e),
            Reasoner::LevelK(k) => k.observe(e),
        }
    }

    pub fn end_episode(&mut self) {
        match self {
            Reasoner::Fpq(a) => a.end_episode(),
            Reasoner::LevelK(k) => k.end_episode(),
        }
    }
}

/// Construction parameters for a [`LevelKAgent`].
#[derive(Debug, Clone)]
pub struct LevelKSpec {
    pub level: usize,
    pub own: AgentConfig,
    /// Configuration of every modelled level below the top one.
    pub inner: AgentConfig,
    /// Frequency model used by the level-1 learner at the bottom.
    pub base_belief: BeliefKind,
    pub opp_reward: OpponentReward,
    pub view: OpponentView,
}

#[derive(Debug, Clone)]
pub struct LevelKAgent {
    level: usize,
    q: QTensor,
    cfg: AgentConfig,
    schedule: EpsilonSchedule,
    inner: Reasoner,
    opp_reward: OpponentReward,
    feed: ModelFeed,
}

impl LevelKAgent {
    pub fn new(spec: &LevelKSpec, own_actions: usize, opp_actions: usize) -> Result<Self> {
        if spec.level < 2 {
            return Err(config(format!(
                "level-k agents start at level 2 (got {}); use an FPQ agent for level 1",
                spec.level
            )));
        }
        spec.own.validate()?;
        let modelled = match spec.view {
            OpponentView::Step => own_actions,
            OpponentView::Episode { choices } => choices,
        };
        let inner = Reasoner::build(
            spec.level - 1,
            opp_actions,
            modelled,
            &spec.inner,
            &spec.inner,
            spec.base_belief,
            spec.opp_reward,
        )?;
        Ok(LevelKAgent {
            level: spec.level,
            q: QTensor::new(own_actions, opp_actions, spec.own.initial_q),
            schedule: EpsilonSchedule::new(&spec.own),
            cfg: spec.own.clone(),
            inner,
            opp_reward: spec.opp_reward,
            feed: ModelFeed::new(spec.view),
        })
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn q(&self) -> &QTensor {
        &self.q
    }

    /// The model of the opponent, one level down.
    pub fn inner(&self) -> &Reasoner {
        &self.inner
    }

    pub fn opponent_policy(&self, s: StateId) -> Result<PolicyDistribution> {
        self.inner.predicted_policy(self.feed.state(s))
    }

    pub fn values(&self, s: StateId) -> Result<Vec<f64>> {
        self.q.expected_values(s, &self.opponent_policy(s)?)
    }

    fn observe(&mut self, e: &Experience) -> Result<()> {
        e.validate()?;
        if let Some(seen) = self.feed.feed(e, self.opp_reward.of(e)) {
            self.inner.observe(&seen)?;
        }
        let next = self.opponent_policy(e.next_state)?;
        q3_update(&mut self.q, e, &next, &self.cfg)?;
        Ok(())
    }

    fn end_episode(&mut self) {
        self.schedule.end_episode();
        self.inner.end_episode();
    }
}

impl Agent for LevelKAgent {
    fn name(&self) -> String {
        format!("level{}", self.level)
    }

    fn act(&self, state: StateId, rng: &mut AgentRng) -> Result<ActionId> {
        select_action(
            &self.values(state)?,
            self.cfg.policy(self.schedule.epsilon()),
            rng,
        )
    }

    fn observe(&mut self, e: &Experience) -> Result<()> {
        LevelKAgent::observe(self, e)
    }

    fn observe_choice(&mut self, signal: &[f64]) -> Result<()> {
        self.feed.note_choice(signal);
        Ok(())
    }

    fn end_episode(&mut self) {
        LevelKAgent::end_episode(self)
    }

    fn epsilon(&self) -> f64 {
        self.schedule.epsilon()
    }

    fn belief(&self, state: StateId) -> Option<PolicyDistribution> {
        self.opponent_policy(state).ok()
    }
}

/// Decision maker that acts on a posterior-weighted average of several
/// opponent models, crediting each model whose greedy prediction matched the
/// opponent's realized action.
#[derive(Debug, Clone)]
pub struct MixtureAgent {
    q: QTensor,
    cfg: AgentConfig,
    schedule: EpsilonSchedule,
    members: Vec<Reasoner>,
    mixture: ModelMixture,
    opp_reward: OpponentReward,
    feed: ModelFeed,
}

impl MixtureAgent {
    pub fn new(
        own_actions: usize,
        cfg: AgentConfig,
        members: Vec<Reasoner>,
        opp_reward: OpponentReward,
        view: OpponentView,
    ) -> Result<Self> {
        cfg.validate()?;
        if members.is_empty() {
            return Err(config("a mixture needs at least one opponent model"));
        }
        let opp_actions = members[0].values(0)?.len();
        for m in &members {
            if m.values(0)?.len() != opp_actions {
                return Err(contract(
                    "mixture members disagree on the opponent action count",
                ));
            }
        }
        Ok(Self {
            q: QTensor::new(own_actions, opp_actions, cfg.initial_q),
            schedule: EpsilonSchedule::new(&cfg),
            mixture: ModelMixture::uniform(members.len())?,
            cfg,
            members,
            opp_reward,
            feed: ModelFeed::new(view),
        })
    }

    /// Mixture over opponent models at the given reasoning levels. A level-`l`
    /// member models the opponent as a level-`l` learner.
    #[allow(clippy::too_many_arguments)]
    pub fn with_levels(
        levels: &[usize],
        own_actions: usize,
        opp_actions: usize,
        cfg: AgentConfig,
        member_cfg: &AgentConfig,
        base_belief: BeliefKind,
        opp_reward: OpponentReward,
        view: OpponentView,
    ) -> Result<Self> {
        let modelled = match view {
            OpponentView::Step => own_actions,
            OpponentView::Episode { choices } => choices,
        };
        let members = levels
            .iter()
            .map(|l| {
                Reasoner::build(
                    *l,
                    opp_actions,
                    modelled,
                    member_cfg,
                    member_cfg,
                    base_belief,
                    opp_reward,
                )
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(own_actions, cfg, members, opp_reward, view)
    }

    pub fn mixture(&self) -> &ModelMixture {
        &self.mixture
    }

    pub fn members(&self) -> &[Reasoner] {
        &self.members
    }

    pub fn q(&self) -> &QTensor {
        &self.q
    }

    pub fn opponent_belief(&self, s: StateId) -> Result<PolicyDistribution> {
        let s = self.feed.state(s);
        if let [only] = self.members.as_slice() {
            return only.predicted_policy(s);
        }
        let per_model = self
            .members
            .iter()
            .map(|m| m.predicted_policy(s))
            .collect::<Result<Vec<_>>>()?;
        self.mixture.belief(&per_model)
    }

    pub fn values(&self, s: StateId) -> Result<Vec<f64>> {
        self.q.expected_values(s, &self.opponent_belief(s)?)
    }
}

impl Agent for MixtureAgent {
    fn name(&self) -> String {
        let levels: Vec<String> = self
            .members
            .iter()
            .map(|m| format!("l{}", m.level()))
            .collect();
        format!("mixture[{}]", levels.join("+"))
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
        if let Some(seen) = self.feed.feed(e, self.opp_reward.of(e)) {
            let predictions = self
                .members
                .iter()
                .map(|m| m.greedy(seen.state))
                .collect::<Result<Vec<_>>>()?;
            self.mixture.observe(&predictions, seen.dm_action)?;
            for m in &mut self.members {
                m.observe(&seen)?;
            }
        }
        let next = self.opponent_belief(e.next_state)?;
        q3_update(&mut self.q, e, &next, &self.cfg)?;
        Ok(())
    }

    fn observe_choice(&mut self, signal: &[f64]) -> Result<()> {
        self.feed.note_choice(signal);
        Ok(())
    }

    fn end_episode(&mut self) {
        self.schedule.end_episode();
        for m in &mut self.members {
            m.end_episode();
        }
    }

    fn epsilon(&self) -> f64 {
        self.schedule.epsilon()
    }

    fn mixture_weights(&self) -> Option<Vec<f64>> {
        Some(self.mixture.weights().into_inner())
    }

    fn belief(&self, state: StateId) -> Option<PolicyDistribution> {
        self.opponent_belief(state).ok()
    }
}
