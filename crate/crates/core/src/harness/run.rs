use log::{debug, info};
use rand::SeedableRng;
use rayon::prelude::*;
use serde::Serialize;

use crate::agents::Agent;
use crate::envs::Environment;
use crate::error::Result;
use crate::tabular::{AgentRng, Experience, StateId};

use super::config::ExperimentConfig;
use super::factory::{build_agent, build_env, Seat};

/// One row group of the output: every player's outcome at one step (or
/// episode, for episodic environments). Player 0 is the decision maker.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub seed: u64,
    pub step: u64,
    pub rewards: Vec<f64>,
    pub cum_rewards: Vec<f64>,
    pub epsilons: Vec<f64>,
    /// Decision maker's posterior over opponent models, when snapshots are on.
    pub weights: Option<Vec<f64>>,
}

/// Belief dump for one record.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Snapshot {
    pub seed: u64,
    pub step: u64,
    pub state: StateId,
    pub belief: Option<Vec<f64>>,
    pub weights: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunOutput {
    pub records: Vec<RunRecord>,
    pub snapshots: Vec<Snapshot>,
}

/// Stream `component` of the master seed: 0 is the environment, 1 the
/// decision maker, `2 + i` adversary `i`.
pub fn component_rng(seed: u64, component: u64) -> AgentRng {
    let mut rng = AgentRng::seed_from_u64(seed);
    rng.set_stream(component);
    rng
}

/// A single seeded replication: environment, agents and their streams.
pub struct Replication {
    seed: u64,
    env: Box<dyn Environment>,
    dm: Box<dyn Agent>,
    adversaries: Vec<Box<dyn Agent>>,
    dm_rng: AgentRng,
    adv_rngs: Vec<AgentRng>,
    state: StateId,
    index: u64,
    cum: Vec<f64>,
    snapshots: bool,
}

impl Replication {
    pub fn new(cfg: &ExperimentConfig, seed: u64) -> Result<Self> {
        let mut env = build_env(&cfg.env)?;
        let dm = build_agent(&cfg.agent_a, Seat::DecisionMaker, env.as_ref())?;
        let n = env.opp_actions().len();
        let adversaries = (0..n)
            .map(|i| build_agent(&cfg.agent_b, Seat::Adversary(i), env.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        let state = env.reset();
        Ok(Self {
            seed,
            env,
            dm,
            adversaries,
            dm_rng: component_rng(seed, 1),
            adv_rngs: (0..n as u64).map(|i| component_rng(seed, 2 + i)).collect(),
            state,
            index: 0,
            cum: vec![0.0; n + 1],
            snapshots: cfg.snapshots,
        })
    }

    pub fn dm(&self) -> &dyn Agent {
        self.dm.as_ref()
    }

    pub fn adversary(&self, i: usize) -> &dyn Agent {
        self.adversaries[i].as_ref()
    }

    pub fn env(&self) -> &dyn Environment {
        self.env.as_ref()
    }

    fn transition(&mut self) -> Result<Experience> {
        let s = self.state;
        let a = self.dm.act(s, &mut self.dm_rng)?;
        let bs = self
            .adversaries
            .iter()
            .zip(&mut self.adv_rngs)
            .map(|(adv, rng)| adv.act(s, rng))
            .collect::<Result<Vec<_>>>()?;
        let e = self.env.step(a, &bs)?;
        let signal = self.env.choice_signal(&e);
        if let Some(sig) = &signal {
            self.dm.observe_choice(sig)?;
        }
        self.dm.observe(&e)?;
        for (i, adv) in self.adversaries.iter_mut().enumerate() {
            adv.observe(&e.swapped(i, e.reward_opp[i]))?;
            if let Some(sig) = &signal {
                adv.observe_choice(sig)?;
            }
        }
        self.state = if e.terminal {
            self.env.reset()
        } else {
            e.next_state
        };
        Ok(e)
    }

    fn end_episode(&mut self) {
        self.dm.end_episode();
        for adv in &mut self.adversaries {
            adv.end_episode();
        }
    }

    /// Plays one step, or one full episode in episodic environments, and
    /// reports every transition to `on_step`.
    pub fn advance(
        &mut self,
        on_step: &mut dyn FnMut(&Experience),
    ) -> Result<(RunRecord, Option<Snapshot>)> {
        let mut rewards = vec![0.0; self.cum.len()];
        loop {
            let e = self.transition()?;
            on_step(&e);
            rewards[0] += e.reward_dm;
            for (r, x) in rewards[1..].iter_mut().zip(&e.reward_opp) {
                *r += x;
            }
            if !self.env.episodic() || e.terminal {
                break;
            }
        }
        self.end_episode();
        for (c, r) in self.cum.iter_mut().zip(&rewards) {
            *c += r;
        }
        let mut epsilons = vec![self.dm.epsilon()];
        epsilons.extend(self.adversaries.iter().map(|a| a.epsilon()));
        let weights = if self.snapshots {
            self.dm.mixture_weights()
        } else {
            None
        };
        let record = RunRecord {
            seed: self.seed,
            step: self.index,
            rewards,
            cum_rewards: self.cum.clone(),
            epsilons,
            weights: weights.clone(),
        };
        let snapshot = self.snapshots.then(|| Snapshot {
            seed: self.seed,
            step: self.index,
            state: self.state,
            belief: self.dm.belief(self.state).map(|b| b.into_inner()),
            weights,
        });
        self.index += 1;
        Ok((record, snapshot))
    }

    pub fn run_with(
        &mut self,
        budget: u64,
        on_step: &mut dyn FnMut(&Experience),
    ) -> Result<RunOutput> {
        let mut out = RunOutput::default();
        for _ in 0..budget {
            let (record, snapshot) = self.advance(on_step)?;
            out.records.push(record);
            out.snapshots.extend(snapshot);
        }
        Ok(out)
    }
}

/// Runs every seed, in parallel, and merges results in seed order.
///
/// All replications are constructed first, so configuration errors surface
/// before any stepping.
pub fn run(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let reps = cfg
        .seeds
        .iter()
        .map(|s| Replication::new(cfg, *s))
        .collect::<Result<Vec<_>>>()?;
    info!(
        "running {} vs {} on {} for {} seeds",
        cfg.agent_a,
        cfg.agent_b,
        reps[0].env.id(),
        reps.len()
    );
    let parts = reps
        .into_par_iter()
        .map(|mut rep| {
            let out = rep.run_with(cfg.budget, &mut |_| {})?;
            debug!("seed {} done", rep.seed);
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut merged = RunOutput::default();
    for part in parts {
        merged.records.extend(part.records);
        merged.snapshots.extend(part.snapshots);
    }
    Ok(merged)
}
