//! Brute-force oracles on small explicit TMDPs: the exact Bellman operator,
//! its contraction ratio, value iteration and a learning-vs-oracle check.

use rand::Rng;
use serde::Serialize;

use crate::beliefs::DirichletCounts;
use crate::error::{config, contract, Result};
use crate::tabular::{
    max_of, select_action, td_update, AgentRng, Policy, PolicyDistribution, QTensor, TieBreak,
};

/// Dense q-values indexed `[(s * dm_actions + a) * opp_actions + b]`.
pub type DenseQ = Vec<f64>;

/// A fully specified TMDP with a fixed opponent policy.
#[derive(Debug, Clone, PartialEq)]
pub struct ExplicitTmdp {
    pub n_states: usize,
    pub n_dm_actions: usize,
    pub n_opp_actions: usize,
    /// `p(s'|s,a,b)`, indexed like [`DenseQ`] then by `s'`.
    pub transition: Vec<f64>,
    /// `r(s,a,b)`, indexed like [`DenseQ`].
    pub reward: Vec<f64>,
    pub opp_policy: Vec<PolicyDistribution>,
    pub gamma: f64,
}

impl ExplicitTmdp {
    pub fn validate(&self) -> Result<()> {
        let (s, a, b) = (self.n_states, self.n_dm_actions, self.n_opp_actions);
        if s == 0 || a == 0 || b == 0 || s > 5 || a > 5 || b > 5 {
            return Err(config(format!(
                "oracle sizes must lie in 1..=5, got {s}x{a}x{b}"
            )));
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(config(format!("gamma {} outside [0, 1)", self.gamma)));
        }
        if self.reward.len() != self.len() || self.transition.len() != self.len() * s {
            return Err(contract("reward or transition tensor has the wrong shape"));
        }
        if self.reward.iter().any(|r| !r.is_finite()) {
            return Err(contract("rewards must be finite"));
        }
        for row in self.transition.chunks(s) {
            let total: f64 = row.iter().sum();
            if row.iter().any(|p| *p < 0.0) || (total - 1.0).abs() > 1e-9 {
                return Err(contract(format!(
                    "transition row {row:?} is not a distribution"
                )));
            }
        }
        if self.opp_policy.len() != s || self.opp_policy.iter().any(|p| p.len() != b) {
            return Err(contract("opponent policy needs one distribution per state"));
        }
        Ok(())
    }

    /// Number of `(s, a, b)` entries.
    pub fn len(&self) -> usize {
        self.n_states * self.n_dm_actions * self.n_opp_actions
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, s: usize, a: usize, b: usize) -> usize {
        (s * self.n_dm_actions + a) * self.n_opp_actions + b
    }

    fn next_row(&self, s: usize, a: usize, b: usize) -> &[f64] {
        let i = self.index(s, a, b) * self.n_states;
        &self.transition[i..i + self.n_states]
    }

    /// `max_a' E_{p(b'|s')} q(s',a',b')` for every state.
    fn state_values(&self, q: &[f64]) -> Vec<f64> {
        (0..self.n_states)
            .map(|s| {
                let p = self.opp_policy[s].probabilities();
                let marginals: Vec<f64> = (0..self.n_dm_actions)
                    .map(|a| {
                        (0..self.n_opp_actions)
                            .map(|b| p[b] * q[self.index(s, a, b)])
                            .sum()
                    })
                    .collect();
                max_of(&marginals)
            })
            .collect()
    }
}

/// Random TMDP with rewards in `[-1, 1]` and Dirichlet(1)-like rows.
pub fn random_tmdp(
    rng: &mut AgentRng,
    n_states: usize,
    n_dm_actions: usize,
    n_opp_actions: usize,
    gamma: f64,
) -> Result<ExplicitTmdp> {
    let entries = n_states * n_dm_actions * n_opp_actions;
    let mut simplex = |n: usize| -> Vec<f64> {
        let raw: Vec<f64> = (0..n).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
        let total: f64 = raw.iter().sum();
        raw.into_iter().map(|x| x / total).collect()
    };
    let transition = (0..entries).flat_map(|_| simplex(n_states)).collect();
    let opp_policy = (0..n_states)
        .map(|_| PolicyDistribution::from_weights(simplex(n_opp_actions)))
        .collect::<Result<_>>()?;
    let reward = (0..entries).map(|_| rng.gen_range(-1.0..=1.0)).collect();
    let tmdp = ExplicitTmdp {
        n_states,
        n_dm_actions,
        n_opp_actions,
        transition,
        reward,
        opp_policy,
        gamma,
    };
    tmdp.validate()?;
    Ok(tmdp)
}

/// Exact application of the TMDP Bellman operator.
pub fn bellman_h(tmdp: &ExplicitTmdp, q: &[f64]) -> Result<DenseQ> {
    if q.len() != tmdp.len() {
        return Err(contract(format!(
            "q has {} entries, tmdp needs {}",
            q.len(),
            tmdp.len()
        )));
    }
    let v = tmdp.state_values(q);
    let mut out = vec![0.0; tmdp.len()];
    for s in 0..tmdp.n_states {
        for a in 0..tmdp.n_dm_actions {
            for b in 0..tmdp.n_opp_actions {
                let i = tmdp.index(s, a, b);
                let future: f64 = tmdp
                    .next_row(s, a, b)
                    .iter()
                    .zip(&v)
                    .map(|(p, x)| p * x)
                    .sum();
                out[i] = tmdp.reward[i] + tmdp.gamma * future;
            }
        }
    }
    Ok(out)
}

pub fn sup_distance(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

/// Largest `|Hq1 - Hq2| / |q1 - q2|` over random pairs with entries in `[-10, 10]`.
pub fn contraction_check(tmdp: &ExplicitTmdp, trials: usize, rng: &mut AgentRng) -> Result<f64> {
    if trials == 0 {
        return Err(config("contraction check needs at least one trial"));
    }
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let q1: DenseQ = (0..tmdp.len())
            .map(|_| rng.gen_range(-10.0..=10.0))
            .collect();
        let q2: DenseQ = (0..tmdp.len())
            .map(|_| rng.gen_range(-10.0..=10.0))
            .collect();
        worst = worst.max(pair_ratio(tmdp, &q1, &q2)?.unwrap_or(0.0));
    }
    Ok(worst)
}

/// Contraction ratio of one pair, `None` when the pair coincides.
pub fn pair_ratio(tmdp: &ExplicitTmdp, q1: &[f64], q2: &[f64]) -> Result<Option<f64>> {
    let d = sup_distance(q1, q2);
    if d == 0.0 {
        return Ok(None);
    }
    Ok(Some(
        sup_distance(&bellman_h(tmdp, q1)?, &bellman_h(tmdp, q2)?) / d,
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixedPoint {
    pub q: DenseQ,
    pub iterations: usize,
    /// A posteriori bound on the distance to the true fixed point.
    pub error_bound: f64,
}

pub fn value_iteration(tmdp: &ExplicitTmdp, tol: f64) -> Result<FixedPoint> {
    value_iteration_from(tmdp, vec![0.0; tmdp.len()], tol)
}

pub fn value_iteration_from(tmdp: &ExplicitTmdp, start: DenseQ, tol: f64) -> Result<FixedPoint> {
    if tol <= 0.0 {
        return Err(config("value iteration tolerance must be positive"));
    }
    tmdp.validate()?;
    let mut q = start;
    let mut iterations = 0;
    loop {
        let next = bellman_h(tmdp, &q)?;
        iterations += 1;
        let change = sup_distance(&next, &q);
        q = next;
        if change < tol {
            let g = tmdp.gamma;
            return Ok(FixedPoint {
                q,
                iterations,
                error_bound: tol * g / (1.0 - g),
            });
        }
    }
}

/// Step-size rule for the learning-vs-oracle comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LearningRate {
    /// Numerator `c` in `c / (visits + 1)^omega`, capped at 1.
    pub scale: f64,
    pub omega: f64,
}

impl LearningRate {
    pub fn harmonic(scale: f64) -> Self {
        Self { scale, omega: 1.0 }
    }

    pub fn at(&self, visits: u64) -> f64 {
        (self.scale / ((visits + 1) as f64).powf(self.omega)).min(1.0)
    }
}

/// Where the learner's opponent belief comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BeliefSource {
    /// The true opponent policy.
    Known,
    /// Per-state Dirichlet counts of the opponent actions seen so far.
    Estimated,
}

/// Learns with the TMDP update and the true opponent policy as belief, then
/// returns `|Q - Q*|` against value iteration at `1e-8`.
pub fn q_learning_vs_oracle(
    tmdp: &ExplicitTmdp,
    rate: LearningRate,
    steps: u64,
    rng: &mut AgentRng,
) -> Result<f64> {
    let oracle = value_iteration(tmdp, 1e-8)?;
    let learned = q_learning(tmdp, rate, steps, BeliefSource::Known, rng)?;
    Ok(sup_distance(&learned, &oracle.q))
}

pub fn q_learning(
    tmdp: &ExplicitTmdp,
    rate: LearningRate,
    steps: u64,
    source: BeliefSource,
    rng: &mut AgentRng,
) -> Result<DenseQ> {
    tmdp.validate()?;
    let mut q = QTensor::new(tmdp.n_dm_actions, tmdp.n_opp_actions, 0.0);
    let mut visits = vec![0u64; tmdp.len()];
    let mut counts = (0..tmdp.n_states)
        .map(|_| DirichletCounts::symmetric(tmdp.n_opp_actions, 1.0, 1.0))
        .collect::<Result<Vec<_>>>()?;
    let belief_at = |counts: &[DirichletCounts], s: usize| match source {
        BeliefSource::Known => Ok(tmdp.opp_policy[s].clone()),
        BeliefSource::Estimated => counts[s].posterior_mean(),
    };
    let behaviour = Policy::EpsilonGreedy {
        epsilon: 0.3,
        ties: TieBreak::Random,
    };
    let mut s = 0;
    for _ in 0..steps {
        let a = select_action(
            &q.expected_values(s, &belief_at(&counts, s)?)?,
            behaviour,
            rng,
        )?;
        let b = sample(tmdp.opp_policy[s].probabilities(), rng);
        counts[s].observe(b)?;
        let i = tmdp.index(s, a, b);
        let next = sample(tmdp.next_row(s, a, b), rng);
        let alpha = rate.at(visits[i]);
        visits[i] += 1;
        td_update(
            &mut q,
            s,
            a,
            b,
            tmdp.reward[i],
            next,
            false,
            &belief_at(&counts, next)?,
            alpha,
            tmdp.gamma,
        )?;
        s = next;
    }
    let mut dense = vec![0.0; tmdp.len()];
    for s in 0..tmdp.n_states {
        for a in 0..tmdp.n_dm_actions {
            for b in 0..tmdp.n_opp_actions {
                dense[tmdp.index(s, a, b)] = q.get(s, a, b);
            }
        }
    }
    Ok(dense)
}

fn sample(p: &[f64], rng: &mut AgentRng) -> usize {
    let mut u = rng.gen::<f64>();
    for (i, x) in p.iter().enumerate() {
        if u < *x {
            return i;
        }
        u -= x;
    }
    p.len() - 1
}

#[derive(Debug, Clone, Serialize)]
pub struct ContractionReport {
    pub gamma: f64,
    pub tmdps: usize,
    pub trials: usize,
    pub max_ratio: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleReport {
    pub steps: u64,
    pub sup_error: f64,
    pub threshold: f64,
    pub passed: bool,
    /// Same run with the belief estimated from observed actions; reported
    /// only, since no convergence rate is claimed for that case.
    pub estimated_belief_error: f64,
}

#[derive(Debug, Clone, Serialize, Default)]
pub struct VerifyReport {
    pub contraction: Vec<ContractionReport>,
    pub oracle: Option<OracleReport>,
    pub passed: bool,
}

/// 20 random TMDPs with 1 000 pairs each, per discount.
pub fn contraction_suite(seed: u64) -> Result<Vec<ContractionReport>> {
    use rand::{Rng, SeedableRng};
    let mut out = Vec::new();
    for gamma in [0.5, 0.8, 0.96] {
        let mut rng = AgentRng::seed_from_u64(seed);
        let mut worst: f64 = 0.0;
        for _ in 0..20 {
            let (s, a, b) = (
                rng.gen_range(1..=5),
                rng.gen_range(1..=3),
                rng.gen_range(1..=3),
            );
            let tmdp = random_tmdp(&mut rng, s, a, b, gamma)?;
            worst = worst.max(contraction_check(&tmdp, 1_000, &mut rng)?);
        }
        out.push(ContractionReport {
            gamma,
            tmdps: 20,
            trials: 1_000,
            max_ratio: worst,
            passed: worst <= gamma + 1e-9,
        });
    }
    Ok(out)
}

/// Discount used by the oracle convergence check.
pub const ORACLE_GAMMA: f64 = 0.9;

/// Step-size rule used by the oracle convergence check.
pub const ORACLE_RATE: LearningRate = LearningRate {
    scale: 10.0,
    omega: 1.0,
};

/// 2-state, 2x2 TMDP learned for `steps` steps and compared to value iteration.
pub fn oracle_suite(seed: u64, steps: u64) -> Result<OracleReport> {
    use rand::SeedableRng;
    let mut rng = AgentRng::seed_from_u64(seed);
    let tmdp = random_tmdp(&mut rng, 2, 2, 2, ORACLE_GAMMA)?;
    let sup_error = q_learning_vs_oracle(&tmdp, ORACLE_RATE, steps, &mut rng)?;
    let oracle = value_iteration(&tmdp, 1e-8)?;
    let estimated = q_learning(&tmdp, ORACLE_RATE, steps, BeliefSource::Estimated, &mut rng)?;
    Ok(OracleReport {
        steps,
        sup_error,
        threshold: 0.05,
        passed: sup_error < 0.05,
        estimated_belief_error: sup_distance(&estimated, &oracle.q),
    })
}
