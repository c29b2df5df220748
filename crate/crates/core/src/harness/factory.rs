//! Builds environments and agents from specs, rejecting bad combinations
//! before any stepping.

use crate::agents::{
    Agent, ConstantAgent, FpqAgent, IndependentQAgent, LevelKAgent, LevelKSpec, MixtureAgent,
    MultiFpqAgent, OpponentReward, OpponentView, SmootherAdversary, TftAgent, WolfConfig,
    WolfPhcAgent,
};
use crate::beliefs::BeliefKind;
use crate::envs::{
    Blotto, Environment, FofStateless, GridWorld, GridWorldSpec, MatrixGame, MatrixGameSpec, Memory,
};
use crate::error::{config, Result};
use crate::tabular::{AgentConfig, PolicyKind, TieBreak};

use super::config::{EnvId, EnvSpec};
use super::spec::AgentSpec;

/// Default exponential-smoother inertia.
pub const DEFAULT_SMOOTHER_BETA: f64 = 0.8;

pub fn build_env(spec: &EnvSpec) -> Result<Box<dyn Environment>> {
    Ok(match spec.id {
        EnvId::Ipd => Box::new(MatrixGame::new(
            "ipd",
            MatrixGameSpec::prisoners_dilemma(Memory::None),
        )),
        EnvId::Ish => Box::new(MatrixGame::new(
            "ish",
            MatrixGameSpec::stag_hunt(Memory::None),
        )),
        EnvId::Ic => Box::new(MatrixGame::new("ic", MatrixGameSpec::chicken(Memory::None))),
        EnvId::IpdMem1 => Box::new(MatrixGame::new(
            "ipd-mem1",
            MatrixGameSpec::prisoners_dilemma(Memory::One),
        )),
        EnvId::FofStateless => Box::new(FofStateless::new(spec.scaling)),
        EnvId::FofGrid => {
            let layout = match &spec.layout {
                Some(text) => GridWorldSpec::parse(text)?,
                None => GridWorldSpec::canonical(),
            };
            Box::new(GridWorld::new(layout, spec.scaling)?)
        }
        EnvId::Blotto => Box::new(Blotto::new(spec.blotto.clone())?),
    })
}

/// Which side of the table an agent sits on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Seat {
    DecisionMaker,
    Adversary(usize),
}

const LEARNER_KEYS: &[&str] = &[
    "alpha", "gamma", "eps", "decay", "every", "policy", "temp", "q0", "ties",
];
const BELIEF_KEYS: &[&str] = &["belief", "prior", "forget", "kappa"];
const INNER_KEYS: &[&str] = &[
    "inner_alpha",
    "inner_gamma",
    "inner_eps",
    "inner_decay",
    "inner_every",
    "inner_q0",
    "opp_reward",
    "view",
];

fn keys(groups: &[&[&'static str]]) -> Vec<&'static str> {
    groups.iter().flat_map(|g| g.iter().copied()).collect()
}

fn learner_config(spec: &AgentSpec, prefix: &str, base: &AgentConfig) -> Result<AgentConfig> {
    let key = |k: &str| format!("{prefix}{k}");
    let mut cfg = AgentConfig {
        alpha: spec.num(&key("alpha"), base.alpha)?,
        gamma: spec.num(&key("gamma"), base.gamma)?,
        epsilon: spec.num(&key("eps"), base.epsilon)?,
        epsilon_decay: spec.num(&key("decay"), base.epsilon_decay)?,
        decay_every: spec.int(&key("every"), base.decay_every)?,
        initial_q: spec.num(&key("q0"), base.initial_q)?,
        ..base.clone()
    };
    if prefix.is_empty() {
        cfg.softmax_temperature = spec.num("temp", base.softmax_temperature)?;
        cfg.policy_kind = match spec.get("policy") {
            None | Some("egreedy") | Some("epsilon-greedy") => PolicyKind::EpsilonGreedy,
            Some("softmax") => PolicyKind::Softmax,
            Some(other) => return Err(config(format!("unknown policy `{other}`"))),
        };
        cfg.tie_break = match spec.get("ties") {
            None | Some("random") => TieBreak::Random,
            Some("first") => TieBreak::First,
            Some(other) => return Err(config(format!("unknown tie rule `{other}`"))),
        };
    }
    cfg.validate()?;
    Ok(cfg)
}

fn belief_kind(spec: &AgentSpec) -> Result<BeliefKind> {
    let prior = spec.num("prior", 1.0)?;
    let forget = spec.num("forget", 1.0)?;
    Ok(match spec.get("belief").unwrap_or("flat") {
        "flat" => BeliefKind::Flat { prior, forget },
        "conditioned" => BeliefKind::Conditioned {
            prior,
            forget,
            kappa: spec.num("kappa", 1.0)?,
        },
        "per-state" => BeliefKind::PerState { prior, forget },
        other => return Err(config(format!("unknown belief `{other}`"))),
    })
}

fn opponent_reward(spec: &AgentSpec, env: &dyn Environment) -> Result<OpponentReward> {
    match spec.get("opp_reward") {
        Some(rule) => OpponentReward::parse(rule),
        None if env.emits_opponent_reward() => Ok(OpponentReward::Observed),
        None => Err(config(format!(
            "`{}` models opponent rewards but `{}` reports none; set opp_reward or a reward scaling",
            spec.kind,
            env.id()
        ))),
    }
}

/// Episodic environments with a choice signal default to the per-episode
/// view: their adversaries commit once per episode.
fn opponent_view(spec: &AgentSpec, env: &dyn Environment) -> Result<OpponentView> {
    let episode = OpponentView::Episode {
        choices: env.signal_len(),
    };
    match spec.get("view") {
        None if env.episodic() && env.signal_len() > 0 => Ok(episode),
        None | Some("step") => Ok(OpponentView::Step),
        Some("episode") if env.signal_len() > 0 => Ok(episode),
        Some("episode") => Err(config(format!(
            "`{}` reports no choice signal for an episode view",
            env.id()
        ))),
        Some(other) => Err(config(format!("unknown opponent view `{other}`"))),
    }
}

/// The level encoded in `level<k>` kinds, or `levelk:level=<k>`.
fn level_of(spec: &AgentSpec) -> Result<Option<usize>> {
    if spec.kind == "levelk" {
        let level = spec.int("level", 2)? as usize;
        return Ok(Some(level));
    }
    match spec.kind.strip_prefix("level") {
        Some(digits) => digits
            .parse()
            .map(Some)
            .map_err(|_| config(format!("unknown agent kind `{}`", spec.kind))),
        None => Ok(None),
    }
}

pub fn build_agent(spec: &AgentSpec, seat: Seat, env: &dyn Environment) -> Result<Box<dyn Agent>> {
    let opp_sizes = env.opp_actions();
    let (own, opp) = match seat {
        Seat::DecisionMaker => (env.dm_actions(), opp_sizes.clone()),
        Seat::Adversary(i) => {
            let own = *opp_sizes
                .get(i)
                .ok_or_else(|| config(format!("no adversary seat {i} in `{}`", env.id())))?;
            (own, vec![env.dm_actions()])
        }
    };
    let learner = !matches!(spec.kind.as_str(), "tft" | "const" | "smoother");
    if learner && matches!(seat, Seat::Adversary(_)) && !env.emits_opponent_reward() {
        return Err(config(format!(
            "learning adversary `{}` needs rewards but `{}` reports none",
            spec.kind,
            env.id()
        )));
    }
    let single_opp = || -> Result<usize> {
        match opp.as_slice() {
            [n] => Ok(*n),
            _ => Err(config(format!(
                "`{}` models a single opponent but `{}` has {}",
                spec.kind,
                env.id(),
                opp.len()
            ))),
        }
    };
    let base = AgentConfig::default();

    if let Some(level) = level_of(spec)? {
        spec.check_keys(&keys(&[LEARNER_KEYS, BELIEF_KEYS, INNER_KEYS, &["level"]]))?;
        let own_cfg = learner_config(spec, "", &base)?;
        let opp_n = single_opp()?;
        if level == 1 {
            return Ok(Box::new(FpqAgent::new(
                own,
                belief_kind(spec)?.build(opp_n)?,
                own_cfg,
            )?));
        }
        let inner = learner_config(spec, "inner_", &own_cfg)?;
        let lk = LevelKSpec {
            level,
            own: own_cfg,
            inner,
            base_belief: belief_kind(spec)?,
            opp_reward: opponent_reward(spec, env)?,
            view: opponent_view(spec, env)?,
        };
        return Ok(Box::new(LevelKAgent::new(&lk, own, opp_n)?));
    }

    Ok(match spec.kind.as_str() {
        "q" => {
            spec.check_keys(LEARNER_KEYS)?;
            Box::new(IndependentQAgent::new(
                own,
                learner_config(spec, "", &base)?,
            )?)
        }
        "fpq" => {
            spec.check_keys(&keys(&[LEARNER_KEYS, BELIEF_KEYS]))?;
            let cfg = learner_config(spec, "", &base)?;
            let kind = belief_kind(spec)?;
            if opp.len() == 1 {
                Box::new(FpqAgent::new(own, kind.build(opp[0])?, cfg)?)
            } else {
                let beliefs = opp
                    .iter()
                    .map(|n| kind.build(*n))
                    .collect::<Result<Vec<_>>>()?;
                Box::new(MultiFpqAgent::new(own, beliefs, cfg)?)
            }
        }
        "mixture" => {
            spec.check_keys(&keys(&[LEARNER_KEYS, BELIEF_KEYS, INNER_KEYS, &["levels"]]))?;
            let levels = spec
                .get("levels")
                .unwrap_or("1+2")
                .split('+')
                .map(|l| {
                    l.parse::<usize>()
                        .ok()
                        .filter(|l| *l >= 1)
                        .ok_or_else(|| config(format!("bad mixture level `{l}`")))
                })
                .collect::<Result<Vec<_>>>()?;
            let cfg = learner_config(spec, "", &base)?;
            let member = learner_config(spec, "inner_", &cfg)?;
            Box::new(MixtureAgent::with_levels(
                &levels,
                own,
                single_opp()?,
                cfg,
                &member,
                belief_kind(spec)?,
                opponent_reward(spec, env)?,
                opponent_view(spec, env)?,
            )?)
        }
        "wolf" => {
            spec.check_keys(&["alpha", "gamma", "eps", "dwin", "dlose"])?;
            let d = WolfConfig::default();
            let delta_win = spec.num("dwin", d.delta_win)?;
            Box::new(WolfPhcAgent::new(
                own,
                WolfConfig {
                    alpha: spec.num("alpha", d.alpha)?,
                    gamma: spec.num("gamma", d.gamma)?,
                    epsilon: spec.num("eps", d.epsilon)?,
                    delta_win,
                    delta_lose: spec.num("dlose", 4.0 * delta_win)?,
                },
            )?)
        }
        "tft" => {
            spec.check_keys(&[])?;
            if own != 2 || single_opp()? != 2 {
                return Err(config("tit-for-tat needs a two-action matrix game"));
            }
            Box::new(TftAgent::new())
        }
        "const" => {
            spec.check_keys(&["action"])?;
            Box::new(ConstantAgent::new(spec.int("action", 0)? as usize, own)?)
        }
        "smoother" => {
            spec.check_keys(&["beta"])?;
            if seat == Seat::DecisionMaker || env.signal_len() != own {
                return Err(config(format!(
                    "smoother adversaries need an environment whose choice signal matches their actions; `{}` has none",
                    env.id()
                )));
            }
            Box::new(SmootherAdversary::new(
                own,
                spec.num("beta", DEFAULT_SMOOTHER_BETA)?,
            )?)
        }
        other => return Err(config(format!("unknown agent kind `{other}`"))),
    })
}
