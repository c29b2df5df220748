//! Opponent models: Dirichlet-categorical counts (optionally with forgetting),
//! state-conditioned beliefs, the exponential smoother and the model mixture.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{contract, Result};
use crate::tabular::{ActionId, PolicyDistribution, StateId};

/// Dirichlet pseudo-counts over an opponent's actions.
///
/// `alphas` holds prior pseudo-counts and observed counts merged together.
/// With `forget_lambda < 1` every entry is reweighted before each increment,
/// so the counts track roughly the last `1 / (1 - lambda)` observations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirichletCounts {
    alphas: Vec<f64>,
    forget_lambda: f64,
}

impl DirichletCounts {
    pub fn new(alphas: Vec<f64>, forget_lambda: f64) -> Result<Self> {
        if alphas.is_empty() || alphas.iter().any(|a| !a.is_finite() || *a < 0.0) {
            return Err(contract(format!("invalid pseudo-counts {alphas:?}")));
        }
        if !(forget_lambda > 0.0 && forget_lambda <= 1.0) {
            return Err(contract(format!(
                "forget factor {forget_lambda} outside (0, 1]"
            )));
        }
        Ok(Self {
            alphas,
            forget_lambda,
        })
    }

    /// Symmetric prior with `prior` pseudo-counts on each of `n` actions.
    pub fn symmetric(n: usize, prior: f64, forget_lambda: f64) -> Result<Self> {
        Self::new(vec![prior; n], forget_lambda)
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn forget_lambda(&self) -> f64 {
        self.forget_lambda
    }

    pub fn len(&self) -> usize {
        self.alphas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alphas.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.alphas.iter().sum()
    }

    /// Reweights by the forget factor, then counts `observed` once.
    pub fn observe(&mut self, observed: ActionId) -> Result<()> {
        if observed >= self.alphas.len() {
            return Err(contract(format!(
                "observed action {observed} but only {} actions exist",
                self.alphas.len()
            )));
        }
        if self.forget_lambda < 1.0 {
            for a in &mut self.alphas {
                *a *= self.forget_lambda;
            }
        }
        self.alphas[observed] += 1.0;
        Ok(())
    }

    /// Posterior mean of the categorical probabilities.
    pub fn posterior_mean(&self) -> Result<PolicyDistribution> {
        PolicyDistribution::from_weights(self.alphas.clone())
            .map_err(|_| contract("posterior mean of all-zero pseudo-counts"))
    }
}

/// `p(b | s)` assembled through Bayes' rule from exact per-action state counts
/// `p(s | b)` and a Dirichlet prior over actions `p(b)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateConditionedBelief {
    state_counts: Vec<HashMap<StateId, u64>>,
    action_totals: Vec<u64>,
    visited: HashSet<StateId>,
    action_prior: DirichletCounts,
    smoothing_kappa: f64,
}

impl StateConditionedBelief {
    pub fn new(action_prior: DirichletCounts, smoothing_kappa: f64) -> Result<Self> {
        if !(smoothing_kappa > 0.0 && smoothing_kappa.is_finite()) {
            return Err(contract(format!(
                "smoothing must be positive, got {smoothing_kappa}"
            )));
        }
        let n = action_prior.len();
        Ok(Self {
            state_counts: vec![HashMap::new(); n],
            action_totals: vec![0; n],
            visited: HashSet::new(),
            action_prior,
            smoothing_kappa,
        })
    }

    pub fn actions(&self) -> usize {
        self.action_totals.len()
    }

    pub fn action_prior(&self) -> &DirichletCounts {
        &self.action_prior
    }

    pub fn count(&self, s: StateId, b: ActionId) -> u64 {
        self.state_counts[b].get(&s).copied().unwrap_or(0)
    }

    pub fn observe(&mut self, s: StateId, b: ActionId) -> Result<()> {
        self.action_prior.observe(b)?;
        *self.state_counts[b].entry(s).or_insert(0) += 1;
        self.action_totals[b] += 1;
        self.visited.insert(s);
        Ok(())
    }

    /// Normalized `p(s | b_j) p(b_j)` at state `s`.
    pub fn conditioned(&self, s: StateId) -> Result<PolicyDistribution> {
        let prior = self.action_prior.posterior_mean()?;
        let visited = self.visited.len().max(1) as f64;
        let kappa = self.smoothing_kappa;
        let weights: Vec<f64> = prior
            .probabilities()
            .iter()
            .enumerate()
            .map(|(j, p_b)| {
                let likelihood = if self.action_totals[j] == 0 {
                    1.0 / visited
                } else {
                    (self.count(s, j) as f64 + kappa)
                        / (self.action_totals[j] as f64 + kappa * visited)
                };
                likelihood * p_b
            })
            .collect();
        match PolicyDistribution::from_weights(weights) {
            Ok(p) => Ok(p),
            // Every likelihood underflowed; the prior is the only information left.
            Err(_) => Ok(prior),
        }
    }
}

/// Exponential smoother over the decision maker's choices, `p := beta p + (1 - beta) a`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmootherState {
    p: PolicyDistribution,
    beta: f64,
}

impl SmootherState {
    /// Starts from the uniform estimate.
    pub fn new(n: usize, beta: f64) -> Result<Self> {
        if !(beta > 0.0 && beta < 1.0) {
            return Err(contract(format!("smoothing rate {beta} outside (0, 1)")));
        }
        if n == 0 {
            return Err(contract("smoother over an empty choice set"));
        }
        Ok(Self {
            p: PolicyDistribution::uniform(n),
            beta,
        })
    }

    pub fn with_estimate(p: PolicyDistribution, beta: f64) -> Result<Self> {
        let mut s = Self::new(p.len(), beta)?;
        s.p = p;
        Ok(s)
    }

    pub fn estimate(&self) -> &PolicyDistribution {
        &self.p
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Absorbs a one-hot observation of `dm_action`.
    pub fn update(&mut self, dm_action: ActionId) -> Result<()> {
        if dm_action >= self.p.len() {
            return Err(contract(format!("choice {dm_action} out of range")));
        }
        let mut onehot = vec![0.0; self.p.len()];
        onehot[dm_action] = 1.0;
        self.update_with(&onehot)
    }

    /// Absorbs an arbitrary observation vector `a`, itself a distribution.
    pub fn update_with(&mut self, a: &[f64]) -> Result<()> {
        if a.len() != self.p.len() {
            return Err(contract(format!(
                "observation of length {} for a smoother over {} choices",
                a.len(),
                self.p.len()
            )));
        }
        let next: Vec<f64> = self
            .p
            .probabilities()
            .iter()
            .zip(a)
            .map(|(p, x)| self.beta * p + (1.0 - self.beta) * x)
            .collect();
        // Renormalize so rounding never accumulates.
        self.p = PolicyDistribution::from_weights(next)?;
        Ok(())
    }

    /// The least-preferred choice, lowest index on ties.
    pub fn argmin(&self) -> ActionId {
        crate::tabular::argmin_first(self.p.probabilities())
    }
}

/// Posterior over a finite set of opponent models, `p(M | H)` proportional to `counts`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelMixture {
    counts: Vec<f64>,
}

impl ModelMixture {
    pub fn new(counts: Vec<f64>) -> Result<Self> {
        if counts.is_empty() || counts.iter().any(|c| !(c.is_finite() && *c > 0.0)) {
            return Err(contract(format!(
                "mixture counts must be positive: {counts:?}"
            )));
        }
        Ok(Self { counts })
    }

    /// Uniform prior with one pseudo-count per model.
    pub fn uniform(models: usize) -> Result<Self> {
        Self::new(vec![1.0; models])
    }

    pub fn counts(&self) -> &[f64] {
        &self.counts
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn weights(&self) -> PolicyDistribution {
        PolicyDistribution::from_weights(self.counts.clone()).expect("counts are positive")
    }

    /// Credits every model whose prediction matched `observed`; no credit when none did.
    pub fn observe(&mut self, predictions: &[ActionId], observed: ActionId) -> Result<()> {
        if predictions.len() != self.counts.len() {
            return Err(contract(format!(
                "{} predictions for {} models",
                predictions.len(),
                self.counts.len()
            )));
        }
        for (n, predicted) in self.counts.iter_mut().zip(predictions) {
            if *predicted == observed {
                *n += 1.0;
            }
        }
        Ok(())
    }

    /// Posterior-weighted average of the member models' beliefs.
    pub fn belief(&self, per_model: &[PolicyDistribution]) -> Result<PolicyDistribution> {
        if per_model.len() != self.counts.len() {
            return Err(contract(format!(
                "{} beliefs for {} models",
                per_model.len(),
                self.counts.len()
            )));
        }
        let n = per_model[0].len();
        if per_model.iter().any(|p| p.len() != n) {
            return Err(contract("member beliefs disagree on the action count"));
        }
        let w = self.weights();
        let mut mix = vec![0.0; n];
        for (weight, p) in w.probabilities().iter().zip(per_model) {
            for (m, x) in mix.iter_mut().zip(p.probabilities()) {
                *m += weight * x;
            }
        }
        PolicyDistribution::from_weights(mix)
    }
}

/// The frequency (level-0) model an agent keeps of another player.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ActionBelief {
    /// One Dirichlet over actions, ignoring the state.
    Flat(DirichletCounts),
    /// Bayes-rule combination of state counts and an action prior.
    Conditioned(StateConditionedBelief),
    /// An independent Dirichlet per state, each sharing the template prior.
    PerState {
        template: DirichletCounts,
        states: HashMap<StateId, DirichletCounts>,
    },
}

impl ActionBelief {
    pub fn per_state(template: DirichletCounts) -> Self {
        ActionBelief::PerState {
            template,
            states: HashMap::new(),
        }
    }

    pub fn actions(&self) -> usize {
        match self {
            ActionBelief::Flat(d) => d.len(),
            ActionBelief::Conditioned(c) => c.actions(),
            ActionBelief::PerState { template, .. } => template.len(),
        }
    }

    pub fn observe(&mut self, s: StateId, b: ActionId) -> Result<()> {
        match self {
            ActionBelief::Flat(d) => d.observe(b),
            ActionBelief::Conditioned(c) => c.observe(s, b),
            ActionBelief::PerState { template, states } => states
                .entry(s)
                .or_insert_with(|| template.clone())
                .observe(b),
        }
    }

    pub fn predict(&self, s: StateId) -> Result<PolicyDistribution> {
        match self {
            ActionBelief::Flat(d) => d.posterior_mean(),
            ActionBelief::Conditioned(c) => c.conditioned(s),
            ActionBelief::PerState { template, states } => {
                states.get(&s).unwrap_or(template).posterior_mean()
            }
        }
    }
}

/// Recipe for building a fresh [`ActionBelief`] over `n` actions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum BeliefKind {
    Flat { prior: f64, forget: f64 },
    Conditioned { prior: f64, forget: f64, kappa: f64 },
    PerState { prior: f64, forget: f64 },
}

impl Default for BeliefKind {
    fn default() -> Self {
        BeliefKind::Flat {
            prior: 1.0,
            forget: 1.0,
        }
    }
}

impl BeliefKind {
    pub fn build(&self, n: usize) -> Result<ActionBelief> {
        Ok(match *self {
            BeliefKind::Flat { prior, forget } => {
                ActionBelief::Flat(DirichletCounts::symmetric(n, prior, forget)?)
            }
            BeliefKind::Conditioned {
                prior,
                forget,
                kappa,
            } => ActionBelief::Conditioned(StateConditionedBelief::new(
                DirichletCounts::symmetric(n, prior, forget)?,
                kappa,
            )?),
            BeliefKind::PerState { prior, forget } => {
                ActionBelief::per_state(DirichletCounts::symmetric(n, prior, forget)?)
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn dirichlet_examples() {
        let mut d = DirichletCounts::new(vec![1.0, 1.0], 1.0).unwrap();
        d.observe(0).unwrap();
        assert_eq!(d.alphas(), &[2.0, 1.0]);

        let mut d = DirichletCounts::new(vec![1.0, 1.0], 0.8).unwrap();
        d.observe(0).unwrap();
        assert_abs_diff_eq!(d.alphas()[0], 1.8, epsilon = 1e-12);
        assert_abs_diff_eq!(d.alphas()[1], 0.8, epsilon = 1e-12);

        assert!(d.observe(2).is_err());
    }

    #[test]
    fn forgetting_matches_the_geometric_series() {
        let lambda: f64 = 0.8;
        let start = 1.0;
        let mut d = DirichletCounts::new(vec![start, start], lambda).unwrap();
        for t in 1..=60 {
            d.observe(0).unwrap();
            let closed = lambda.powi(t) * start + (0..t).map(|k| lambda.powi(k)).sum::<f64>();
            assert_abs_diff_eq!(d.alphas()[0], closed, epsilon = 1e-12);
            assert_abs_diff_eq!(d.alphas()[1], lambda.powi(t) * start, epsilon = 1e-12);
        }
    }

    #[test]
    fn effective_sample_size_under_forgetting() {
        let lambda = 0.8;
        let mut d = DirichletCounts::symmetric(2, 1.0, lambda).unwrap();
        let mut rng = crate::AgentRng::seed_from_u64(1);
        for _ in 0..200 {
            d.observe(rng.gen_range(0..2)).unwrap();
        }
        let target = 1.0 / (1.0 - lambda);
        assert!((d.total() - target).abs() / target < 0.01, "{}", d.total());
    }

    #[test]
    fn posterior_mean_examples() {
        let p = DirichletCounts::new(vec![3.0, 1.0], 1.0)
            .unwrap()
            .posterior_mean()
            .unwrap();
        assert_eq!(p.probabilities(), &[0.75, 0.25]);
        let p = DirichletCounts::symmetric(3, 1.0, 1.0)
            .unwrap()
            .posterior_mean()
            .unwrap();
        for x in p.probabilities() {
            assert_abs_diff_eq!(*x, 1.0 / 3.0, epsilon = 1e-12);
        }
        let zero = DirichletCounts::new(vec![0.0, 0.0], 1.0).unwrap();
        assert!(matches!(
            zero.posterior_mean(),
            Err(crate::Error::Contract(_))
        ));
    }

    #[test]
    fn conditioned_without_data_is_the_prior() {
        let b = StateConditionedBelief::new(DirichletCounts::symmetric(2, 1.0, 1.0).unwrap(), 1.0)
            .unwrap();
        assert_eq!(b.conditioned(7).unwrap().probabilities(), &[0.5, 0.5]);
    }

    #[test]
    fn conditioned_single_state_limit() {
        let tiny = 1e-9;
        let mut b =
            StateConditionedBelief::new(DirichletCounts::symmetric(2, tiny, 1.0).unwrap(), tiny)
                .unwrap();
        for _ in 0..9 {
            b.observe(4, 0).unwrap();
        }
        b.observe(4, 1).unwrap();
        let p = b.conditioned(4).unwrap();
        assert_abs_diff_eq!(p.probabilities()[0], 0.9, epsilon = 1e-6);
        assert_abs_diff_eq!(p.probabilities()[1], 0.1, epsilon = 1e-6);
    }

    #[test]
    fn conditioned_recovers_a_known_policy() {
        let truth = [[0.9, 0.1], [0.2, 0.8], [0.5, 0.5], [0.7, 0.3], [0.35, 0.65]];
        let mut rng = crate::AgentRng::seed_from_u64(2024);
        let mut b =
            StateConditionedBelief::new(DirichletCounts::symmetric(2, 1.0, 1.0).unwrap(), 1.0)
                .unwrap();
        for _ in 0..5_000 {
            let s = rng.gen_range(0..truth.len());
            let act = usize::from(rng.gen::<f64>() >= truth[s][0]);
            b.observe(s, act).unwrap();
        }
        for (s, row) in truth.iter().enumerate() {
            let p = b.conditioned(s).unwrap();
            let tv = 0.5
                * p.probabilities()
                    .iter()
                    .zip(row)
                    .map(|(x, y)| (x - y).abs())
                    .sum::<f64>();
            assert!(tv < 0.05, "state {s}: tv {tv}");
        }
    }

    #[test]
    fn smoother_examples() {
        let mut st = SmootherState::new(2, 0.8).unwrap();
        assert_eq!(st.estimate().probabilities(), &[0.5, 0.5]);
        st.update(0).unwrap();
        assert_abs_diff_eq!(st.estimate().probabilities()[0], 0.6, epsilon = 1e-12);
        assert_abs_diff_eq!(st.estimate().probabilities()[1], 0.4, epsilon = 1e-12);
        for _ in 0..200 {
            st.update(0).unwrap();
        }
        assert!(st.estimate().probabilities()[0] > 1.0 - 1e-12);
    }

    #[test]
    fn mixture_examples() {
        let mut m = ModelMixture::uniform(2).unwrap();
        m.observe(&[0, 1], 0).unwrap();
        assert_eq!(m.counts(), &[2.0, 1.0]);

        let mut m = ModelMixture::uniform(2).unwrap();
        m.observe(&[1, 1], 0).unwrap();
        assert_eq!(m.counts(), &[1.0, 1.0]);

        let mut m = ModelMixture::uniform(2).unwrap();
        m.observe(&[0, 0], 0).unwrap();
        assert_eq!(m.counts(), &[2.0, 2.0]);
        assert!(m.observe(&[0], 0).is_err());
    }

    #[test]
    fn mixture_belief_examples() {
        let beliefs = [
            PolicyDistribution::degenerate(2, 0),
            PolicyDistribution::degenerate(2, 1),
        ];
        let m = ModelMixture::uniform(2).unwrap();
        assert_eq!(m.belief(&beliefs).unwrap().probabilities(), &[0.5, 0.5]);
        let m = ModelMixture::new(vec![3.0, 1.0]).unwrap();
        assert_eq!(m.belief(&beliefs).unwrap().probabilities(), &[0.75, 0.25]);
        let single = PolicyDistribution::new(vec![0.3, 0.7]).unwrap();
        let m = ModelMixture::new(vec![5.0]).unwrap();
        let got = m.belief(std::slice::from_ref(&single)).unwrap();
        for (g, w) in got.probabilities().iter().zip(single.probabilities()) {
            assert_abs_diff_eq!(*g, *w, epsilon = 1e-15);
        }
    }

    #[test]
    fn per_state_beliefs_are_independent() {
        let mut b = ActionBelief::per_state(DirichletCounts::symmetric(2, 1.0, 0.8).unwrap());
        b.observe(0, 0).unwrap();
        b.observe(1, 1).unwrap();
        assert!(b.predict(0).unwrap().probabilities()[0] > 0.5);
        assert!(b.predict(1).unwrap().probabilities()[1] > 0.5);
        assert_eq!(b.predict(9).unwrap().probabilities(), &[0.5, 0.5]);
    }

    proptest! {
        #[test]
        fn posterior_argmax_matches_counts(alphas in prop::collection::vec(0.0..50.0f64, 1..6)) {
            prop_assume!(alphas.iter().sum::<f64>() > 0.0);
            let d = DirichletCounts::new(alphas.clone(), 1.0).unwrap();
            let p = d.posterior_mean().unwrap();
            prop_assert!((p.probabilities().iter().sum::<f64>() - 1.0).abs() < 1e-9);
            prop_assert_eq!(p.mode(), crate::tabular::argmax_first(&alphas));
        }

        #[test]
        fn smoother_stays_a_distribution(
            beta in 0.01..0.99f64,
            moves in prop::collection::vec(0usize..3, 0..300),
        ) {
            let mut st = SmootherState::new(3, beta).unwrap();
            for m in moves {
                st.update(m).unwrap();
                let total: f64 = st.estimate().probabilities().iter().sum();
                prop_assert!((total - 1.0).abs() < 1e-9);
            }
        }

        #[test]
        fn mixture_counts_grow_by_at_most_m(
            steps in prop::collection::vec((prop::collection::vec(0usize..3, 4), 0usize..3), 1..100),
        ) {
            let mut m = ModelMixture::uniform(4).unwrap();
            for (pred, obs) in steps {
                let before = m.counts().to_vec();
                m.observe(&pred, obs).unwrap();
                let added: f64 = m.counts().iter().sum::<f64>() - before.iter().sum::<f64>();
                prop_assert!((0.0..=4.0).contains(&added));
                prop_assert!(m.counts().iter().zip(&before).all(|(a, b)| a >= b));
            }
        }

        #[test]
        fn conditioned_is_a_distribution(
            obs in prop::collection::vec((0usize..6, 0usize..3), 0..200),
            query in 0usize..8,
        ) {
            let mut b = StateConditionedBelief::new(
                DirichletCounts::symmetric(3, 1.0, 0.9).unwrap(), 1.0).unwrap();
            for (s, a) in obs {
                b.observe(s, a).unwrap();
            }
            let p = b.conditioned(query).unwrap();
            prop_assert!((p.probabilities().iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }
}
