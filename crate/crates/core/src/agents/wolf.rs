//! Win-or-learn-fast policy hill climbing.

use std::collections::HashMap;

use rand::Rng;

use crate::error::{config, Result};
use crate::tabular::{
    argmax_first, max_of, ActionId, AgentRng, Experience, PolicyDistribution, QTensor, StateId,
};

use super::Agent;

#[derive(Debug, Clone, PartialEq)]
pub struct WolfConfig {
    pub alpha: f64,
    pub gamma: f64,
    /// Uniform exploration mixed into the behaviour policy.
    pub epsilon: f64,
    pub delta_win: f64,
    pub delta_lose: f64,
}

impl Default for WolfConfig {
    fn default() -> Self {
        Self {
            alpha: 0.1,
            gamma: 0.96,
            epsilon: 0.05,
            delta_win: 0.0025,
            delta_lose: 0.01,
        }
    }
}

impl WolfConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) || !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(config("WoLF-PHC needs alpha in (0, 1] and gamma in (0, 1)"));
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(config("WoLF-PHC epsilon must lie in [0, 1]"));
        }
        if !(self.delta_win > 0.0 && self.delta_win <= self.delta_lose && self.delta_lose <= 1.0) {
            return Err(config(format!(
                "WoLF-PHC needs 0 < delta_win <= delta_lose <= 1, got {} / {}",
                self.delta_win, self.delta_lose
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct WolfPhcAgent {
    q: QTensor,
    policy: HashMap<StateId, Vec<f64>>,
    avg_policy: HashMap<StateId, Vec<f64>>,
    visits: HashMap<StateId, u64>,
    cfg: WolfConfig,
}

impl WolfPhcAgent {
    pub fn new(actions: usize, cfg: WolfConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            q: QTensor::new(actions, 1, 0.0),
            policy: HashMap::new(),
            avg_policy: HashMap::new(),
            visits: HashMap::new(),
            cfg,
        })
    }

    fn actions(&self) -> usize {
        self.q.dm_actions()
    }

    fn q_row(&self, s: StateId) -> Vec<f64> {
        (0..self.actions()).map(|a| self.q.get(s, a, 0)).collect()
    }

    pub fn policy(&self, s: StateId) -> PolicyDistribution {
        self.policy
            .get(&s)
            .map(|p| PolicyDistribution::from_weights(p.clone()).expect("valid policy row"))
            .unwrap_or_else(|| PolicyDistribution::uniform(self.actions()))
    }

    pub fn average_policy(&self, s: StateId) -> PolicyDistribution {
        self.avg_policy
            .get(&s)
            .map(|p| PolicyDistribution::from_weights(p.clone()).expect("valid policy row"))
            .unwrap_or_else(|| PolicyDistribution::uniform(self.actions()))
    }
}

impl Agent for WolfPhcAgent {
    fn name(&self) -> String {
        "wolf".into()
    }

    fn act(&self, state: StateId, rng: &mut AgentRng) -> Result<ActionId> {
        let n = self.actions();
        if self.cfg.epsilon > 0.0 && rng.gen::<f64>() < self.cfg.epsilon {
            return Ok(rng.gen_range(0..n));
        }
        let pi = self.policy(state);
        let mut u = rng.gen::<f64>();
        for (a, p) in pi.probabilities().iter().enumerate() {
            if u < *p {
                return Ok(a);
            }
            u -= p;
        }
        Ok(n - 1)
    }

    fn observe(&mut self, e: &Experience) -> Result<()> {
        let n = self.actions();
        let s = e.state;
        let bootstrap = if e.terminal {
            0.0
        } else {
            max_of(&self.q_row(e.next_state))
        };
        let old = self.q.get(s, e.dm_action, 0);
        let updated = (1.0 - self.cfg.alpha) * old
            + self.cfg.alpha * (e.reward_dm + self.cfg.gamma * bootstrap);
        self.q.set(s, e.dm_action, 0, updated);

        let uniform = vec![1.0 / n as f64; n];
        let pi = self
            .policy
            .entry(s)
            .or_insert_with(|| uniform.clone())
            .clone();
        let visits = self.visits.entry(s).or_insert(0);
        *visits += 1;
        let c = *visits as f64;
        let q = self.q_row(s);
        let avg = self.avg_policy.entry(s).or_insert(uniform);
        for (m, p) in avg.iter_mut().zip(&pi) {
            *m += (p - *m) / c;
        }

        let value = |p: &[f64]| p.iter().zip(&q).map(|(x, v)| x * v).sum::<f64>();
        let delta = if value(&pi) > value(avg) {
            self.cfg.delta_win
        } else {
            self.cfg.delta_lose
        };

        let greedy = argmax_first(&q);
        let mut next = pi;
        let step = delta / (n as f64 - 1.0).max(1.0);
        let mut moved = 0.0;
        for (a, p) in next.iter_mut().enumerate() {
            if a != greedy {
                let d = p.min(step);
                *p -= d;
                moved += d;
            }
        }
        next[greedy] += moved;
        let total: f64 = next.iter().sum();
        for p in &mut next {
            *p = p.max(0.0) / total;
        }
        self.policy.insert(s, next);
        Ok(())
    }

    fn epsilon(&self) -> f64 {
        self.cfg.epsilon
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    /// Plain policy hill climbing with a single step size, written out
    /// independently of the agent above.
    struct Phc {
        q: Vec<f64>,
        pi: Vec<f64>,
        alpha: f64,
        gamma: f64,
        delta: f64,
    }

    impl Phc {
        fn observe(&mut self, a: usize, r: f64) {
            let best = self.q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            self.q[a] = (1.0 - self.alpha) * self.q[a] + self.alpha * (r + self.gamma * best);
            let greedy = self
                .q
                .iter()
                .position(|v| *v == self.q.iter().copied().fold(f64::NEG_INFINITY, f64::max))
                .unwrap();
            let n = self.pi.len() as f64;
            let mut moved = 0.0;
            for i in 0..self.pi.len() {
                if i != greedy {
                    let d = self.pi[i].min(self.delta / (n - 1.0));
                    self.pi[i] -= d;
                    moved += d;
                }
            }
            self.pi[greedy] += moved;
            let t: f64 = self.pi.iter().sum();
            self.pi.iter_mut().for_each(|p| *p /= t);
        }
    }

    fn exp(a: usize, r: f64) -> Experience {
        Experience {
            state: 0,
            dm_action: a,
            opp_actions: vec![0],
            reward_dm: r,
            reward_opp: vec![0.0],
            next_state: 0,
            terminal: false,
        }
    }

    #[test]
    fn equal_step_sizes_reduce_to_phc() {
        let cfg = WolfConfig {
            delta_win: 0.01,
            delta_lose: 0.01,
            epsilon: 0.0,
            ..WolfConfig::default()
        };
        let mut wolf = WolfPhcAgent::new(3, cfg.clone()).unwrap();
        let mut phc = Phc {
            q: vec![0.0; 3],
            pi: vec![1.0 / 3.0; 3],
            alpha: cfg.alpha,
            gamma: cfg.gamma,
            delta: cfg.delta_win,
        };
        let mut r1 = AgentRng::seed_from_u64(4);
        let mut r2 = AgentRng::seed_from_u64(4);
        let payoff = [1.0, -0.5, 0.25];
        for _ in 0..3_000 {
            let a = wolf.act(0, &mut r1).unwrap();
            let mut u = r2.gen::<f64>();
            let mut b = 2;
            for (i, p) in phc.pi.iter().enumerate() {
                if u < *p {
                    b = i;
                    break;
                }
                u -= p;
            }
            assert_eq!(a, b);
            wolf.observe(&exp(a, payoff[a])).unwrap();
            phc.observe(b, payoff[b]);
        }
        for (x, y) in wolf.policy(0).probabilities().iter().zip(&phc.pi) {
            assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn policies_stay_valid_under_random_rewards() {
        let mut wolf = WolfPhcAgent::new(3, WolfConfig::default()).unwrap();
        let mut rng = AgentRng::seed_from_u64(99);
        for _ in 0..100_000 {
            let s = rng.gen_range(0..4);
            let a = wolf.act(s, &mut rng).unwrap();
            let e = Experience {
                state: s,
                next_state: rng.gen_range(0..4),
                ..exp(a, rng.gen_range(-5.0..5.0))
            };
            wolf.observe(&e).unwrap();
        }
        for s in 0..4 {
            for p in [wolf.policy(s), wolf.average_policy(s)] {
                assert!(p.probabilities().iter().all(|x| *x >= 0.0));
                assert!((p.probabilities().iter().sum::<f64>() - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn rejects_inverted_step_sizes() {
        let cfg = WolfConfig {
            delta_win: 0.1,
            delta_lose: 0.01,
            ..WolfConfig::default()
        };
        assert!(WolfPhcAgent::new(2, cfg).is_err());
    }
}
