//! Flat `key = value` experiment files.
//!
//! ```text
//! # spatial gridworld robustness grid
//! env = fof-grid
//! agent_a = level2:alpha={alpha2},inner_alpha={alpha1},eps={eps0}
//! sweep.alpha2,alpha1 = 0.01,0.005 | 0.1,0.05
//! sweep.eps0 = 0.5 | 0.1 | 0.01
//! ```
//!
//! `sweep.<names>` lines declare axes of a Cartesian grid; each alternative is
//! a comma-separated tuple matching the names (taken whole when the axis has
//! a single name). `{name}` placeholders in any
//! value are filled from the current grid point.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::str::FromStr;

use crate::envs::{BlottoSpec, RewardScaling};
use crate::error::{config, Error, Result};

use super::spec::AgentSpec;

const SWEEP_PREFIX: &str = "sweep.";

/// One axis of a parameter grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SweepAxis {
    pub names: Vec<String>,
    pub points: Vec<Vec<String>>,
}

/// A parsed config file before interpretation.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ConfigFile {
    pub entries: BTreeMap<String, String>,
    pub sweeps: Vec<SweepAxis>,
}

fn valid_key(key: &str) -> bool {
    !key.is_empty()
        && key
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'))
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut file = ConfigFile::default();
        let mut seen_axes = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let parse_err = |msg: String| Error::Parse { line: line_no, msg };
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| parse_err(format!("expected `key = value`, got `{line}`")))?;
            let (key, value) = (key.trim(), value.trim());
            if let Some(names) = key.strip_prefix(SWEEP_PREFIX) {
                let names: Vec<String> = names.split(',').map(|n| n.trim().to_string()).collect();
                if names.iter().any(|n| !valid_key(n)) {
                    return Err(parse_err(format!("bad sweep axis names `{key}`")));
                }
                for n in &names {
                    if seen_axes.contains(n) {
                        return Err(parse_err(format!("sweep name `{n}` declared twice")));
                    }
                    seen_axes.push(n.clone());
                }
                // A single-name axis keeps each alternative whole, so agent
                // specs with commas can be swept.
                let points = value
                    .split('|')
                    .map(|alt| match names.len() {
                        1 => vec![alt.trim().to_string()],
                        _ => alt.split(',').map(|v| v.trim().to_string()).collect(),
                    })
                    .collect::<Vec<_>>();
                for p in &points {
                    if p.len() != names.len() || p.iter().any(String::is_empty) {
                        return Err(parse_err(format!(
                            "sweep point `{}` does not match axis names {names:?}",
                            p.join(",")
                        )));
                    }
                }
                file.sweeps.push(SweepAxis { names, points });
                continue;
            }
            if !valid_key(key) {
                return Err(parse_err(format!("bad key `{key}`")));
            }
            if file
                .entries
                .insert(key.to_string(), value.to_string())
                .is_some()
            {
                return Err(parse_err(format!("key `{key}` set twice")));
            }
        }
        Ok(file)
    }

    /// Every grid point as a substituted key-value map, first axis slowest.
    ///
    /// Each map also carries the sweep variables themselves under their names.
    pub fn expand(&self) -> Result<Vec<BTreeMap<String, String>>> {
        let mut points: Vec<BTreeMap<String, String>> = vec![BTreeMap::new()];
        for axis in &self.sweeps {
            let mut next = Vec::with_capacity(points.len() * axis.points.len());
            for base in &points {
                for values in &axis.points {
                    let mut p = base.clone();
                    for (n, v) in axis.names.iter().zip(values) {
                        p.insert(n.clone(), v.clone());
                    }
                    next.push(p);
                }
            }
            points = next;
        }
        points
            .into_iter()
            .map(|vars| {
                let mut out = BTreeMap::new();
                for (k, v) in &self.entries {
                    out.insert(k.clone(), substitute(v, &vars)?);
                }
                for (k, v) in vars {
                    out.entry(k).or_insert(v);
                }
                Ok(out)
            })
            .collect()
    }
}

/// Replaces `{name}` with `vars[name]`; unknown names are an error.
pub fn substitute(value: &str, vars: &BTreeMap<String, String>) -> Result<String> {
    let mut out = String::with_capacity(value.len());
    let mut rest = value;
    while let Some(start) = rest.find('{') {
        out.push_str(&rest[..start]);
        let tail = &rest[start + 1..];
        let end = tail
            .find('}')
            .ok_or_else(|| config(format!("unclosed placeholder in `{value}`")))?;
        let name = &tail[..end];
        let v = vars
            .get(name)
            .ok_or_else(|| config(format!("placeholder `{{{name}}}` has no sweep value")))?;
        out.push_str(v);
        rest = &tail[end + 1..];
    }
    out.push_str(rest);
    Ok(out)
}

/// Environment identifiers accepted on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnvId {
    Ipd,
    Ish,
    Ic,
    IpdMem1,
    FofStateless,
    FofGrid,
    Blotto,
}

impl FromStr for EnvId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "ipd" => EnvId::Ipd,
            "ish" => EnvId::Ish,
            "ic" => EnvId::Ic,
            "ipd-mem1" => EnvId::IpdMem1,
            "fof-stateless" => EnvId::FofStateless,
            "fof-grid" => EnvId::FofGrid,
            "blotto" => EnvId::Blotto,
            other => return Err(config(format!("unknown environment `{other}`"))),
        })
    }
}

impl EnvId {
    pub fn episodic(self) -> bool {
        self == EnvId::FofGrid
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvSpec {
    pub id: EnvId,
    pub scaling: RewardScaling,
    /// Gridworld layout text; the canonical room when absent.
    pub layout: Option<String>,
    pub blotto: BlottoSpec,
}

impl EnvSpec {
    pub fn new(id: EnvId) -> Self {
        Self {
            id,
            scaling: RewardScaling::Minimax,
            layout: None,
            blotto: BlottoSpec::default(),
        }
    }
}

/// A fully interpreted experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub env: EnvSpec,
    pub agent_a: AgentSpec,
    /// Spec for every adversary seat.
    pub agent_b: AgentSpec,
    /// Steps for repeated games, episodes for the gridworld.
    pub budget: u64,
    pub seeds: Vec<u64>,
    pub smoothing_window: usize,
    pub out: Option<PathBuf>,
    /// Adds mixture-weight columns to the CSV and emits belief snapshots.
    pub snapshots: bool,
    pub snapshot_out: Option<PathBuf>,
}

const KNOWN_KEYS: &[&str] = &[
    "env",
    "agent_a",
    "agent_b",
    "steps",
    "episodes",
    "seeds",
    "smoothing_window",
    "out",
    "snapshots",
    "snapshot_out",
    "scaling",
    "layout",
    "blotto.positions",
    "blotto.resources",
    "blotto.attackers",
];

fn parse_num<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| config(format!("`{key}` expects a number, got `{v}`")))
}

/// Comma-separated seeds, with `a..b` for half-open ranges.
pub fn parse_seeds(v: &str) -> Result<Vec<u64>> {
    let mut seeds = Vec::new();
    for part in v.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if let Some((lo, hi)) = part.split_once("..") {
            let (lo, hi): (u64, u64) = (parse_num("seeds", lo)?, parse_num("seeds", hi)?);
            if hi <= lo || hi - lo > 1_000_000 {
                return Err(config(format!("seed range `{part}` is empty or huge")));
            }
            seeds.extend(lo..hi);
        } else {
            seeds.push(parse_num("seeds", part)?);
        }
    }
    Ok(seeds)
}

impl ExperimentConfig {
    /// Interprets a substituted key-value map. Sweep variables that are not
    /// config keys are ignored; any other unknown key is an error.
    pub fn from_map(map: &BTreeMap<String, String>, sweep_vars: &[String]) -> Result<Self> {
        for k in map.keys() {
            if !KNOWN_KEYS.contains(&k.as_str()) && !sweep_vars.contains(k) {
                return Err(config(format!("unknown config key `{k}`")));
            }
        }
        let get = |k: &str| map.get(k).map(String::as_str);
        let need = |k: &str| get(k).ok_or_else(|| config(format!("missing config key `{k}`")));

        let id: EnvId = need("env")?.parse()?;
        let mut env = EnvSpec::new(id);
        if let Some(s) = get("scaling") {
            env.scaling = RewardScaling::parse(s)?;
        }
        if let Some(path) = get("layout") {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            env.layout = Some(text);
        }
        if let Some(v) = get("blotto.positions") {
            env.blotto.positions = parse_num("blotto.positions", v)?;
        }
        if let Some(v) = get("blotto.resources") {
            env.blotto.dm_resources = parse_num("blotto.resources", v)?;
        }
        if let Some(v) = get("blotto.attackers") {
            env.blotto.attackers = parse_num("blotto.attackers", v)?;
        }

        let budget_key = if id.episodic() { "episodes" } else { "steps" };
        let other = if id.episodic() { "steps" } else { "episodes" };
        if get(other).is_some() {
            return Err(config(format!(
                "`{}` budgets are counted in {budget_key}",
                need("env")?
            )));
        }
        let budget: u64 = parse_num(budget_key, need(budget_key)?)?;
        if budget == 0 {
            return Err(config("the budget must be positive"));
        }
        let seeds = parse_seeds(get("seeds").unwrap_or("0"))?;
        if seeds.is_empty() {
            return Err(config("at least one seed is required"));
        }
        let default_window = if id.episodic() { 50 } else { 200 };
        let smoothing_window = match get("smoothing_window") {
            Some(v) => parse_num("smoothing_window", v)?,
            None => default_window,
        };
        if smoothing_window == 0 {
            return Err(config("smoothing_window must be positive"));
        }
        let snapshots = match get("snapshots") {
            None | Some("false") | Some("off") | Some("0") => false,
            Some("true") | Some("on") | Some("1") => true,
            Some(v) => return Err(config(format!("`snapshots` expects true/false, got `{v}`"))),
        };
        Ok(Self {
            env,
            agent_a: need("agent_a")?.parse()?,
            agent_b: need("agent_b")?.parse()?,
            budget,
            seeds,
            smoothing_window,
            out: get("out").map(PathBuf::from),
            snapshots,
            snapshot_out: get("snapshot_out").map(PathBuf::from),
        })
    }

    /// Parses a config text without sweep axes.
    pub fn parse(text: &str) -> Result<Self> {
        let file = ConfigFile::parse(text)?;
        if !file.sweeps.is_empty() {
            return Err(config("sweep axes need the `sweep` command"));
        }
        Self::from_map(&file.entries, &[])
    }
}
