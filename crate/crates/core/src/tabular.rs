//! Action-value storage, the threatened-MDP update rules and action selection.
//!
//! The central object is [`QTensor`], a sparse table of `Q(s, a, b)` where `a`
//! is the decision maker's action and `b` the adversary's. Values for one state
//! are kept as a dense `|A| x |B|` block, allocated on first write.

use std::collections::HashMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{config, contract, Result};

pub type StateId = usize;
pub type ActionId = usize;

/// Random source used by every stochastic component.
pub type AgentRng = ChaCha8Rng;

const SUM_TOL: f64 = 1e-9;

/// A probability vector over a finite action set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PolicyDistribution(Vec<f64>);

impl PolicyDistribution {
    /// Checked constructor: entries must be nonnegative and sum to one.
    pub fn new(probabilities: Vec<f64>) -> Result<Self> {
        if probabilities.is_empty() {
            return Err(contract("empty distribution"));
        }
        if probabilities.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(contract(format!(
                "distribution has negative or non-finite entries: {probabilities:?}"
            )));
        }
        let total: f64 = probabilities.iter().sum();
        if (total - 1.0).abs() > SUM_TOL {
            return Err(contract(format!("distribution sums to {total}, not 1")));
        }
        Ok(Self(probabilities))
    }

    /// Normalizes nonnegative weights into a distribution.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(contract(format!("invalid weights: {weights:?}")));
        }
        let total: f64 = weights.iter().sum();
        if weights.is_empty() || total <= 0.0 {
            return Err(contract("weights must have positive total mass"));
        }
        Ok(Self(weights.into_iter().map(|w| w / total).collect()))
    }

    pub fn uniform(n: usize) -> Self {
        assert!(n > 0, "uniform distribution over an empty set");
        Self(vec![1.0 / n as f64; n])
    }

    pub fn degenerate(n: usize, at: ActionId) -> Self {
        assert!(at < n, "degenerate distribution index out of range");
        let mut p = vec![0.0; n];
        p[at] = 1.0;
        Self(p)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Index of the largest entry; ties resolve to the lowest index.
    pub fn mode(&self) -> ActionId {
        argmax_first(&self.0)
    }

    /// Product distribution over joint indices, last factor varying fastest.
    pub fn product(factors: &[PolicyDistribution]) -> Self {
        let mut joint = vec![1.0];
        for f in factors {
            let mut next = Vec::with_capacity(joint.len() * f.len());
            for &pj in &joint {
                next.extend(f.0.iter().map(|p| pj * p));
            }
            joint = next;
        }
        Self(joint)
    }
}

impl AsRef<[f64]> for PolicyDistribution {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// How an agent turns action values into a behaviour policy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PolicyKind {
    EpsilonGreedy,
    Softmax,
}

/// How greedy selection resolves equal values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum TieBreak {
    /// Uniformly at random among the maximizers.
    #[default]
    Random,
    /// The lowest-index maximizer.
    First,
}

/// Learning and exploration parameters shared by the tabular learners.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentConfig {
    pub alpha: f64,
    pub gamma: f64,
    pub epsilon: f64,
    pub epsilon_decay: f64,
    pub decay_every: u64,
    pub policy_kind: PolicyKind,
    pub softmax_temperature: f64,
    /// Value of every Q entry before its first update.
    pub initial_q: f64,
    pub tie_break: TieBreak,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            alpha: 0.3,
            gamma: 0.96,
            epsilon: 0.1,
            epsilon_decay: 1.0,
            decay_every: 1,
            policy_kind: PolicyKind::EpsilonGreedy,
            softmax_temperature: 1.0,
            initial_q: 0.0,
            tie_break: TieBreak::Random,
        }
    }
}

impl AgentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(config(format!(
                "alpha must lie in (0, 1], got {}",
                self.alpha
            )));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(config(format!(
                "gamma must lie in (0, 1), got {}",
                self.gamma
            )));
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(config(format!(
                "epsilon must lie in [0, 1], got {}",
                self.epsilon
            )));
        }
        if !(self.epsilon_decay > 0.0 && self.epsilon_decay <= 1.0) {
            return Err(config(format!(
                "epsilon_decay must lie in (0, 1], got {}",
                self.epsilon_decay
            )));
        }
        if self.decay_every == 0 {
            return Err(config("decay_every must be positive"));
        }
        if !(self.softmax_temperature > 0.0 && self.softmax_temperature.is_finite()) {
            return Err(config(format!(
                "softmax_temperature must be positive, got {}",
                self.softmax_temperature
            )));
        }
        if !self.initial_q.is_finite() {
            return Err(config("initial_q must be finite"));
        }
        Ok(())
    }

    /// The behaviour policy at exploration rate `epsilon`.
    pub fn policy(&self, epsilon: f64) -> Policy {
        match self.policy_kind {
            PolicyKind::EpsilonGreedy => Policy::EpsilonGreedy {
                epsilon,
                ties: self.tie_break,
            },
            PolicyKind::Softmax => Policy::Softmax {
                temperature: self.softmax_temperature,
            },
        }
    }
}

/// Multiplicative exploration decay, applied once every `decay_every` episodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsilonSchedule {
    epsilon: f64,
    decay: f64,
    every: u64,
    episodes: u64,
}

impl EpsilonSchedule {
    pub fn new(cfg: &AgentConfig) -> Self {
        Self {
            epsilon: cfg.epsilon,
            decay: cfg.epsilon_decay,
            every: cfg.decay_every,
            episodes: 0,
        }
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn end_episode(&mut self) {
        self.episodes += 1;
        if self.episodes.is_multiple_of(self.every) {
            self.epsilon *= self.decay;
        }
    }
}

/// A concrete behaviour policy with its current parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Policy {
    EpsilonGreedy { epsilon: f64, ties: TieBreak },
    Softmax { temperature: f64 },
}

/// One transition seen from the decision maker's seat.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Experience {
    pub state: StateId,
    pub dm_action: ActionId,
    /// One entry per adversary.
    pub opp_actions: Vec<ActionId>,
    pub reward_dm: f64,
    pub reward_opp: Vec<f64>,
    pub next_state: StateId,
    pub terminal: bool,
}

impl Experience {
    pub fn validate(&self) -> Result<()> {
        if self.opp_actions.is_empty() || self.opp_actions.len() != self.reward_opp.len() {
            return Err(contract(format!(
                "experience carries {} opponent actions and {} opponent rewards",
                self.opp_actions.len(),
                self.reward_opp.len()
            )));
        }
        Ok(())
    }

    /// The same transition seen from adversary `index`, whose reward is `reward`.
    ///
    /// The swapped view has the adversary in the decision-maker seat and the
    /// original decision maker as its only opponent.
    pub fn swapped(&self, index: usize, reward: f64) -> Experience {
        Experience {
            state: self.state,
            dm_action: self.opp_actions[index],
            opp_actions: vec![self.dm_action],
            reward_dm: reward,
            reward_opp: vec![self.reward_dm],
            next_state: self.next_state,
            terminal: self.terminal,
        }
    }
}

/// Sparse `Q(s, a, b)` table with a fixed value for unwritten keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QTensor {
    dm_actions: usize,
    opp_actions: usize,
    default_value: f64,
    rows: HashMap<StateId, Vec<f64>>,
}

impl QTensor {
    pub fn new(dm_actions: usize, opp_actions: usize, default_value: f64) -> Self {
        assert!(dm_actions > 0 && opp_actions > 0, "empty action set");
        Self {
            dm_actions,
            opp_actions,
            default_value,
            rows: HashMap::new(),
        }
    }

    pub fn dm_actions(&self) -> usize {
        self.dm_actions
    }

    pub fn opp_actions(&self) -> usize {
        self.opp_actions
    }

    pub fn default_value(&self) -> f64 {
        self.default_value
    }

    pub fn get(&self, s: StateId, a: ActionId, b: ActionId) -> f64 {
        debug_assert!(a < self.dm_actions && b < self.opp_actions);
        self.rows
            .get(&s)
            .map_or(self.default_value, |row| row[a * self.opp_actions + b])
    }

    pub fn set(&mut self, s: StateId, a: ActionId, b: ActionId, value: f64) {
        assert!(
            a < self.dm_actions && b < self.opp_actions,
            "Q index ({a}, {b}) out of range"
        );
        let width = self.opp_actions;
        let len = self.dm_actions * width;
        let default = self.default_value;
        let row = self.rows.entry(s).or_insert_with(|| vec![default; len]);
        row[a * width + b] = value;
    }

    /// Number of states with at least one written entry.
    pub fn visited_states(&self) -> usize {
        self.rows.len()
    }

    /// Iterates over every stored value.
    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.rows.values().flat_map(|r| r.iter().copied())
    }

    /// `E_b[Q(s, a, b)]` for every own action `a`.
    pub fn expected_values(&self, s: StateId, belief: &PolicyDistribution) -> Result<Vec<f64>> {
        self.check_belief(belief)?;
        let p = belief.probabilities();
        Ok(match self.rows.get(&s) {
            None => vec![self.default_value; self.dm_actions],
            Some(row) => row
                .chunks_exact(self.opp_actions)
                .map(|block| block.iter().zip(p).map(|(q, w)| q * w).sum())
                .collect(),
        })
    }

    fn check_belief(&self, belief: &PolicyDistribution) -> Result<()> {
        if belief.len() != self.opp_actions {
            return Err(contract(format!(
                "belief has {} entries but the opponent has {} actions",
                belief.len(),
                self.opp_actions
            )));
        }
        Ok(())
    }
}

/// `Q(s, a) = E_{p(b|s)}[Q(s, a, b)]`.
pub fn q_marginal(
    q: &QTensor,
    state: StateId,
    dm_action: ActionId,
    belief: &PolicyDistribution,
) -> Result<f64> {
    q.check_belief(belief)?;
    if dm_action >= q.dm_actions {
        return Err(contract(format!("action {dm_action} out of range")));
    }
    Ok(belief
        .probabilities()
        .iter()
        .enumerate()
        .map(|(b, w)| w * q.get(state, dm_action, b))
        .sum())
}

/// One temporal-difference step on `Q(s, a, b)` with an explicit step size.
///
/// The bootstrap is `max_{a'} E_{belief_next}[Q(s', a', b')]`, expectation
/// inside the max, and zero on terminal transitions.
#[allow(clippy::too_many_arguments)]
pub fn td_update(
    q: &mut QTensor,
    s: StateId,
    a: ActionId,
    b: ActionId,
    reward: f64,
    next_state: StateId,
    terminal: bool,
    belief_next: &PolicyDistribution,
    alpha: f64,
    gamma: f64,
) -> Result<f64> {
    q.check_belief(belief_next)?;
    if a >= q.dm_actions || b >= q.opp_actions {
        return Err(contract(format!("joint action ({a}, {b}) out of range")));
    }
    let bootstrap = if terminal {
        0.0
    } else {
        max_of(&q.expected_values(next_state, belief_next)?)
    };
    let old = q.get(s, a, b);
    let new = (1.0 - alpha) * old + alpha * (reward + gamma * bootstrap);
    q.set(s, a, b, new);
    Ok(new)
}

/// Applies the threatened-MDP update for a single-adversary transition.
pub fn q3_update(
    q: &mut QTensor,
    e: &Experience,
    belief_next: &PolicyDistribution,
    cfg: &AgentConfig,
) -> Result<f64> {
    e.validate()?;
    td_update(
        q,
        e.state,
        e.dm_action,
        e.opp_actions[0],
        e.reward_dm,
        e.next_state,
        e.terminal,
        belief_next,
        cfg.alpha,
        cfg.gamma,
    )
}

/// Samples an action from `values` under `policy`.
pub fn select_action(values: &[f64], policy: Policy, rng: &mut AgentRng) -> Result<ActionId> {
    if values.is_empty() {
        return Err(contract("cannot select from an empty value vector"));
    }
    Ok(match policy {
        Policy::EpsilonGreedy { epsilon, ties } => {
            if epsilon > 0.0 && rng.gen::<f64>() < epsilon {
                rng.gen_range(0..values.len())
            } else if ties == TieBreak::First {
                argmax_first(values)
            } else {
                argmax_random(values, rng)
            }
        }
        Policy::Softmax { temperature } => {
            let top = max_of(values);
            let weights: Vec<f64> = values
                .iter()
                .map(|v| ((v - top) / temperature).exp())
                .collect();
            let total: f64 = weights.iter().sum();
            let mut u = rng.gen::<f64>() * total;
            let mut pick = values.len() - 1;
            for (i, w) in weights.iter().enumerate() {
                if u < *w {
                    pick = i;
                    break;
                }
                u -= w;
            }
            pick
        }
    })
}

/// The explicit epsilon-greedy distribution: `1 - epsilon` split equally over
/// the maximizers plus `epsilon / n` everywhere.
pub fn policy_from_values(values: &[f64], epsilon: f64) -> Result<PolicyDistribution> {
    if values.is_empty() {
        return Err(contract("cannot build a policy from no values"));
    }
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(contract(format!("epsilon {epsilon} outside [0, 1]")));
    }
    let n = values.len() as f64;
    let top = max_of(values);
    let winners = values.iter().filter(|v| **v == top).count() as f64;
    let probabilities = values
        .iter()
        .map(|v| {
            let greedy = if *v == top {
                (1.0 - epsilon) / winners
            } else {
                0.0
            };
            greedy + epsilon / n
        })
        .collect();
    Ok(PolicyDistribution(probabilities))
}

pub(crate) fn max_of(values: &[f64]) -> f64 {
    values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

pub(crate) fn argmax_first(values: &[f64]) -> usize {
    let top = max_of(values);
    values.iter().position(|v| *v == top).unwrap_or(0)
}

pub(crate) fn argmin_first(values: &[f64]) -> usize {
    let low = values.iter().copied().fold(f64::INFINITY, f64::min);
    values.iter().position(|v| *v == low).unwrap_or(0)
}

/// Argmax with uniform tie-breaking among the maximizers.
pub(crate) fn argmax_random(values: &[f64], rng: &mut AgentRng) -> usize {
    let top = max_of(values);
    let ties = values.iter().filter(|v| **v == top).count();
    if ties <= 1 {
        return argmax_first(values);
    }
    let pick = rng.gen_range(0..ties);
    values
        .iter()
        .enumerate()
        .filter(|(_, v)| **v == top)
        .nth(pick)
        .map(|(i, _)| i)
        .unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::Rng;
    use rand::SeedableRng;

    fn terminal_exp(reward: f64) -> Experience {
        Experience {
            state: 0,
            dm_action: 0,
            opp_actions: vec![0],
            reward_dm: reward,
            reward_opp: vec![-reward],
            next_state: 1,
            terminal: true,
        }
    }

    fn cfg(alpha: f64, gamma: f64) -> AgentConfig {
        AgentConfig {
            alpha,
            gamma,
            ..AgentConfig::default()
        }
    }

    #[test]
    fn terminal_update_ignores_bootstrap() {
        let mut q = QTensor::new(2, 2, 0.0);
        q.set(1, 0, 0, 100.0);
        let v = q3_update(
            &mut q,
            &terminal_exp(1.0),
            &PolicyDistribution::uniform(2),
            &cfg(0.5, 0.9),
        )
        .unwrap();
        assert_abs_diff_eq!(v, 0.5);
    }

    #[test]
    fn bootstrap_takes_max_of_expectations() {
        let mut q = QTensor::new(2, 2, 0.0);
        q.set(1, 0, 0, 2.0);
        q.set(1, 0, 1, 2.0);
        let mut e = terminal_exp(1.0);
        e.terminal = false;
        let v = q3_update(&mut q, &e, &PolicyDistribution::uniform(2), &cfg(0.5, 0.9)).unwrap();
        assert_abs_diff_eq!(v, 1.4, epsilon = 1e-12);
        assert_abs_diff_eq!(q.get(0, 0, 0), 1.4, epsilon = 1e-12);
    }

    #[test]
    fn expectation_sits_inside_the_max() {
        // Max-inside-expectation would give 0.5 * 4 + 0.5 * 4 = 4; the rule wants max(2, 2) = 2.
        let mut q = QTensor::new(2, 2, 0.0);
        q.set(1, 0, 0, 4.0);
        q.set(1, 1, 1, 4.0);
        let mut e = terminal_exp(0.0);
        e.terminal = false;
        let v = q3_update(&mut q, &e, &PolicyDistribution::uniform(2), &cfg(1.0, 0.5)).unwrap();
        assert_abs_diff_eq!(v, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn update_rejects_wrong_belief_dimension() {
        let mut q = QTensor::new(2, 2, 0.0);
        let err = q3_update(
            &mut q,
            &terminal_exp(1.0),
            &PolicyDistribution::uniform(3),
            &cfg(0.5, 0.9),
        );
        assert!(matches!(err, Err(crate::Error::Contract(_))));
        assert!(matches!(
            q_marginal(&q, 0, 0, &PolicyDistribution::uniform(3)),
            Err(crate::Error::Contract(_))
        ));
    }

    #[test]
    fn unwritten_keys_read_default() {
        let mut q = QTensor::new(2, 3, -7.0);
        assert_eq!(q.get(42, 1, 2), -7.0);
        q.set(42, 0, 0, 1.0);
        assert_eq!(q.get(42, 1, 2), -7.0);
        assert_eq!(q.get(41, 0, 0), -7.0);
    }

    #[test]
    fn marginal_examples() {
        let mut q = QTensor::new(1, 2, 0.0);
        q.set(0, 0, 0, 1.0);
        q.set(0, 0, 1, 3.0);
        assert_abs_diff_eq!(
            q_marginal(&q, 0, 0, &PolicyDistribution::uniform(2)).unwrap(),
            2.0
        );
        let degenerate = PolicyDistribution::degenerate(2, 0);
        assert_eq!(q_marginal(&q, 0, 0, &degenerate).unwrap(), 1.0);
    }

    #[test]
    fn policy_from_values_examples() {
        let p = policy_from_values(&[5.0, 1.0], 0.1).unwrap();
        assert_abs_diff_eq!(p.probabilities()[0], 0.95, epsilon = 1e-12);
        assert_abs_diff_eq!(p.probabilities()[1], 0.05, epsilon = 1e-12);
        let p = policy_from_values(&[3.0, 3.0], 0.2).unwrap();
        assert_eq!(p.probabilities(), &[0.5, 0.5]);
        let p = policy_from_values(&[1.0, 2.0, 3.0], 0.3).unwrap();
        for (got, want) in p.probabilities().iter().zip([0.1, 0.1, 0.8]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-12);
        }
    }

    #[test]
    fn greedy_selection_picks_the_maximum() {
        let mut rng = AgentRng::seed_from_u64(3);
        for _ in 0..200 {
            let a = select_action(
                &[5.0, 1.0, 1.0],
                Policy::EpsilonGreedy {
                    epsilon: 0.0,
                    ties: TieBreak::Random,
                },
                &mut rng,
            )
            .unwrap();
            assert_eq!(a, 0);
        }
    }

    #[test]
    fn ties_and_softmax_are_symmetric() {
        let mut rng = AgentRng::seed_from_u64(11);
        let n = 10_000;
        let greedy = (0..n)
            .filter(|_| {
                select_action(
                    &[2.0, 2.0],
                    Policy::EpsilonGreedy {
                        epsilon: 0.0,
                        ties: TieBreak::Random,
                    },
                    &mut rng,
                )
                .unwrap()
                    == 0
            })
            .count();
        assert!((greedy as f64 / n as f64 - 0.5).abs() < 0.02);
        for temperature in [0.1, 1.0, 50.0] {
            let soft = (0..n)
                .filter(|_| {
                    select_action(&[0.0, 0.0], Policy::Softmax { temperature }, &mut rng).unwrap()
                        == 0
                })
                .count();
            assert!((soft as f64 / n as f64 - 0.5).abs() < 0.02);
        }
    }

    #[test]
    fn softmax_prefers_larger_values() {
        let mut rng = AgentRng::seed_from_u64(5);
        let hits = (0..5_000)
            .filter(|_| {
                select_action(&[1.0, 0.0], Policy::Softmax { temperature: 1.0 }, &mut rng).unwrap()
                    == 0
            })
            .count() as f64
            / 5_000.0;
        let expected = 1.0_f64.exp() / (1.0_f64.exp() + 1.0);
        assert!((hits - expected).abs() < 0.03, "{hits} vs {expected}");
    }

    #[test]
    fn empty_values_are_rejected() {
        let mut rng = AgentRng::seed_from_u64(0);
        assert!(select_action(
            &[],
            Policy::EpsilonGreedy {
                epsilon: 0.1,
                ties: TieBreak::Random,
            },
            &mut rng
        )
        .is_err());
        assert!(policy_from_values(&[], 0.1).is_err());
    }

    #[test]
    fn schedule_decays_once_per_interval() {
        let cfg = AgentConfig {
            epsilon: 1.0,
            epsilon_decay: 0.5,
            decay_every: 3,
            ..AgentConfig::default()
        };
        let mut s = EpsilonSchedule::new(&cfg);
        let seen: Vec<f64> = (0..7)
            .map(|_| {
                s.end_episode();
                s.epsilon()
            })
            .collect();
        assert_eq!(seen, vec![1.0, 1.0, 0.5, 0.5, 0.5, 0.25, 0.25]);
    }

    #[test]
    fn config_validation() {
        assert!(AgentConfig::default().validate().is_ok());
        assert!(cfg(0.0, 0.9).validate().is_err());
        assert!(cfg(0.5, 1.0).validate().is_err());
    }

    fn arb_values() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-100.0..100.0f64, 1..8)
    }

    proptest! {
        #[test]
        fn policy_is_a_distribution_with_floor(values in arb_values(), eps in 0.0..=1.0f64) {
            let p = policy_from_values(&values, eps).unwrap();
            let total: f64 = p.probabilities().iter().sum();
            prop_assert!((total - 1.0).abs() < 1e-9);
            let floor = eps / values.len() as f64;
            prop_assert!(p.probabilities().iter().all(|x| *x >= floor - 1e-15));
        }

        #[test]
        fn greedy_choice_is_affine_invariant(
            values in arb_values(),
            scale in 0.01..100.0f64,
            shift in -50.0..50.0f64,
            seed in any::<u64>(),
        ) {
            let transformed: Vec<f64> = values.iter().map(|v| scale * v + shift).collect();
            let greedy = Policy::EpsilonGreedy {
                epsilon: 0.0,
                ties: TieBreak::Random,
            };
            // The affine map can merge near-ties through rounding; compare the maximizer sets.
            let top = |v: &[f64]| -> Vec<usize> {
                let m = max_of(v);
                (0..v.len()).filter(|i| v[*i] == m).collect()
            };
            if top(&values) == top(&transformed) {
                let mut r1 = AgentRng::seed_from_u64(seed);
                let mut r2 = AgentRng::seed_from_u64(seed);
                for _ in 0..20 {
                    prop_assert_eq!(
                        select_action(&values, greedy, &mut r1).unwrap(),
                        select_action(&transformed, greedy, &mut r2).unwrap()
                    );
                }
            }
        }

        #[test]
        fn marginal_is_linear_in_belief(
            entries in prop::collection::vec(-10.0..10.0f64, 3),
            w1 in prop::collection::vec(0.01..1.0f64, 3),
            w2 in prop::collection::vec(0.01..1.0f64, 3),
            lambda in 0.0..=1.0f64,
        ) {
            let mut q = QTensor::new(1, 3, 0.0);
            for (b, v) in entries.iter().enumerate() {
                q.set(0, 0, b, *v);
            }
            let p = PolicyDistribution::from_weights(w1).unwrap();
            let r = PolicyDistribution::from_weights(w2).unwrap();
            let mix = PolicyDistribution::from_weights(
                p.probabilities().iter().zip(r.probabilities())
                    .map(|(x, y)| lambda * x + (1.0 - lambda) * y).collect()
            ).unwrap();
            let lhs = q_marginal(&q, 0, 0, &mix).unwrap();
            let rhs = lambda * q_marginal(&q, 0, 0, &p).unwrap()
                + (1.0 - lambda) * q_marginal(&q, 0, 0, &r).unwrap();
            prop_assert!((lhs - rhs).abs() < 1e-9);
        }

        #[test]
        fn uniform_marginal_is_the_mean(entries in prop::collection::vec(-10.0..10.0f64, 1..6)) {
            let n = entries.len();
            let mut q = QTensor::new(1, n, 0.0);
            for (b, v) in entries.iter().enumerate() {
                q.set(3, 0, b, *v);
            }
            let mean = entries.iter().sum::<f64>() / n as f64;
            let got = q_marginal(&q, 3, 0, &PolicyDistribution::uniform(n)).unwrap();
            prop_assert!((got - mean).abs() < 1e-9);
        }

        #[test]
        fn values_stay_within_the_discounted_bound(
            seed in any::<u64>(),
            gamma in 0.1..0.99f64,
            alpha in 0.01..=1.0f64,
        ) {
            let r_max = 5.0;
            let bound = r_max / (1.0 - gamma);
            let mut rng = AgentRng::seed_from_u64(seed);
            let mut q = QTensor::new(2, 2, 0.0);
            let c = AgentConfig { alpha, gamma, ..AgentConfig::default() };
            for _ in 0..500 {
                let w = vec![rng.gen::<f64>() + 1e-3, rng.gen::<f64>() + 1e-3];
                let belief = PolicyDistribution::from_weights(w).unwrap();
                let e = Experience {
                    state: rng.gen_range(0..3),
                    dm_action: rng.gen_range(0..2),
                    opp_actions: vec![rng.gen_range(0..2)],
                    reward_dm: rng.gen_range(-r_max..=r_max),
                    reward_opp: vec![0.0],
                    next_state: rng.gen_range(0..3),
                    terminal: rng.gen_bool(0.1),
                };
                q3_update(&mut q, &e, &belief, &c).unwrap();
            }
            prop_assert!(q.values().all(|v| v.abs() <= bound + 1e-9));
        }
    }
}
