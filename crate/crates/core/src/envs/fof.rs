//! Friend-or-foe: the decision maker picks one of two targets while an
//! adversary decides which target hides the positive reward.

use std::fmt;

use crate::beliefs::SmootherState;
use crate::error::{config, contract, Error, Result};
use crate::tabular::{ActionId, Experience, StateId};

use super::{onehot, Environment};

pub const TARGET_REWARD: f64 = 50.0;

/// How the adversary's reward is derived from the decision maker's outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RewardScaling {
    /// `r_B = -r_A`, step costs included.
    Minimax,
    /// +1 when the decision maker misses, -1 when she hits, 0 otherwise.
    PlusMinusOne,
    /// +1 when the decision maker misses, 0 otherwise.
    ZeroOne,
    /// The environment reports no adversary reward.
    Unobserved,
}

impl RewardScaling {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "minimax" | "zero-sum" => Ok(Self::Minimax),
            "pm1" | "plus-minus-one" => Ok(Self::PlusMinusOne),
            "01" | "zero-one" => Ok(Self::ZeroOne),
            "none" | "unobserved" => Ok(Self::Unobserved),
            other => Err(config(format!("unknown reward scaling `{other}`"))),
        }
    }

    /// `hit` is `Some(true)` when the decision maker found the reward,
    /// `Some(false)` when she opened the wrong target, `None` otherwise.
    fn opponent_reward(self, reward_dm: f64, hit: Option<bool>) -> f64 {
        match (self, hit) {
            (Self::Minimax, _) => -reward_dm,
            (Self::PlusMinusOne, Some(true)) => -1.0,
            (Self::PlusMinusOne, Some(false)) => 1.0,
            (Self::ZeroOne, Some(false)) => 1.0,
            _ => 0.0,
        }
    }
}

/// Single-state friend-or-foe. Every step is a one-step episode.
#[derive(Debug, Clone)]
pub struct FofStateless {
    scaling: RewardScaling,
}

impl FofStateless {
    pub fn new(scaling: RewardScaling) -> Self {
        Self { scaling }
    }

    fn resolve(&self, dm_target: ActionId, rewarded: ActionId) -> Result<Experience> {
        if dm_target > 1 || rewarded > 1 {
            return Err(contract(format!(
                "targets must be 0 or 1, got dm {dm_target} / adversary {rewarded}"
            )));
        }
        let hit = dm_target == rewarded;
        let reward_dm = if hit { TARGET_REWARD } else { -TARGET_REWARD };
        Ok(Experience {
            state: 0,
            dm_action: dm_target,
            opp_actions: vec![rewarded],
            reward_dm,
            reward_opp: vec![self.scaling.opponent_reward(reward_dm, Some(hit))],
            next_state: 0,
            terminal: true,
        })
    }
}

/// One round against a smoothing adversary: the reward goes to the target
/// the adversary believes the decision maker visits least, judged from `p`
/// before this round; `p` then absorbs the decision maker's choice.
pub fn stateless_fof_step(
    dm_target: ActionId,
    adversary: &mut SmootherState,
    scaling: RewardScaling,
) -> Result<Experience> {
    let rewarded = adversary.argmin();
    let e = FofStateless::new(scaling).resolve(dm_target, rewarded)?;
    adversary.update(dm_target)?;
    Ok(e)
}

impl Environment for FofStateless {
    fn id(&self) -> &'static str {
        "fof-stateless"
    }

    fn dm_actions(&self) -> usize {
        2
    }

    fn opp_actions(&self) -> Vec<usize> {
        vec![2]
    }

    fn n_states(&self) -> usize {
        1
    }

    fn episodic(&self) -> bool {
        false
    }

    fn emits_opponent_reward(&self) -> bool {
        self.scaling != RewardScaling::Unobserved
    }

    fn reset(&mut self) -> StateId {
        0
    }

    fn step(&mut self, dm_action: ActionId, opp_actions: &[ActionId]) -> Result<Experience> {
        let rewarded = *opp_actions
            .first()
            .ok_or_else(|| contract("friend-or-foe needs one adversary action"))?;
        self.resolve(dm_action, rewarded)
    }

    fn choice_signal(&self, e: &Experience) -> Option<Vec<f64>> {
        Some(onehot(2, e.dm_action))
    }

    fn signal_len(&self) -> usize {
        2
    }
}

/// The four compass moves, in action-id order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Move {
    Up,
    Down,
    Left,
    Right,
}

impl Move {
    pub const ALL: [Move; 4] = [Move::Up, Move::Down, Move::Left, Move::Right];

    pub fn from_action(a: ActionId) -> Option<Self> {
        Self::ALL.get(a).copied()
    }
}

/// Layout and rewards of the spatial friend-or-foe room.
#[derive(Debug, Clone, PartialEq)]
pub struct GridWorldSpec {
    pub width: usize,
    pub height: usize,
    /// Row-major wall mask.
    pub walls: Vec<bool>,
    pub start: (usize, usize),
    pub targets: [(usize, usize); 2],
    pub step_reward: f64,
    pub win_reward: f64,
    pub lose_reward: f64,
    pub max_steps: usize,
}

const CANONICAL_ROOM: &str = "\
#######
#1...2#
#.....#
#.....#
#.....#
#.....#
#.....#
#..A..#
#######
";

impl GridWorldSpec {
    /// The 7x9 walled room: start at the bottom centre, targets in the two
    /// top interior corners, both eight moves away.
    pub fn canonical() -> Self {
        Self::parse(CANONICAL_ROOM).expect("canonical layout parses")
    }

    /// Parses an ASCII room: `#` wall, `.` or space floor, `A` start,
    /// `1` and `2` the targets. Rows must have equal width.
    pub fn parse(text: &str) -> Result<Self> {
        let rows: Vec<&str> = text
            .lines()
            .map(|l| l.trim_end_matches('\r'))
            .filter(|l| !l.is_empty())
            .collect();
        if rows.is_empty() {
            return Err(Error::Parse {
                line: 1,
                msg: "empty layout".into(),
            });
        }
        let width = rows[0].chars().count();
        let height = rows.len();
        if width == 0 || width.saturating_mul(height) > 1 << 20 {
            return Err(Error::Parse {
                line: 1,
                msg: format!("unsupported layout size {width}x{height}"),
            });
        }
        let mut walls = vec![false; width * height];
        let mut start = None;
        let mut targets = [None, None];
        for (y, row) in rows.iter().enumerate() {
            if row.chars().count() != width {
                return Err(Error::Parse {
                    line: y + 1,
                    msg: format!("row has {} cells, expected {width}", row.chars().count()),
                });
            }
            for (x, c) in row.chars().enumerate() {
                let slot = |what: &str| Error::Parse {
                    line: y + 1,
                    msg: format!("duplicate {what}"),
                };
                match c {
                    '#' => walls[y * width + x] = true,
                    '.' | ' ' => {}
                    'A' => {
                        if start.replace((x, y)).is_some() {
                            return Err(slot("start"));
                        }
                    }
                    '1' | '2' => {
                        let i = usize::from(c == '2');
                        if targets[i].replace((x, y)).is_some() {
                            return Err(slot("target"));
                        }
                    }
                    other => {
                        return Err(Error::Parse {
                            line: y + 1,
                            msg: format!("unexpected cell `{other}`"),
                        })
                    }
                }
            }
        }
        let missing = |what: &str| Error::Parse {
            line: height,
            msg: format!("layout has no {what}"),
        };
        let spec = Self {
            width,
            height,
            walls,
            start: start.ok_or_else(|| missing("start `A`"))?,
            targets: [
                targets[0].ok_or_else(|| missing("target `1`"))?,
                targets[1].ok_or_else(|| missing("target `2`"))?,
            ],
            step_reward: -1.0,
            win_reward: TARGET_REWARD,
            lose_reward: -TARGET_REWARD,
            max_steps: 50,
        };
        Ok(spec)
    }

    pub fn cell(&self, state: StateId) -> (usize, usize) {
        (state % self.width, state / self.width)
    }

    pub fn state(&self, cell: (usize, usize)) -> StateId {
        cell.1 * self.width + cell.0
    }

    pub fn is_wall(&self, cell: (usize, usize)) -> bool {
        cell.0 >= self.width || cell.1 >= self.height || self.walls[self.state(cell)]
    }

    pub fn target_at(&self, cell: (usize, usize)) -> Option<usize> {
        self.targets.iter().position(|t| *t == cell)
    }
}

impl fmt::Display for GridWorldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for y in 0..self.height {
            for x in 0..self.width {
                let c = if (x, y) == self.start {
                    'A'
                } else if let Some(t) = self.target_at((x, y)) {
                    if t == 0 {
                        '1'
                    } else {
                        '2'
                    }
                } else if self.is_wall((x, y)) {
                    '#'
                } else {
                    '.'
                };
                write!(f, "{c}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Result of one move in the room.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridOutcome {
    pub position: (usize, usize),
    pub reward: f64,
    /// Index of the target reached on this move.
    pub reached: Option<usize>,
}

/// Moves once from `position`. Walls block the move; every move costs the
/// step reward, and entering a target adds the win or lose reward depending
/// on whether it is the adversary's rewarded target.
pub fn grid_step(
    spec: &GridWorldSpec,
    position: (usize, usize),
    dm_move: Move,
    rewarded_target: usize,
) -> GridOutcome {
    let (x, y) = position;
    let candidate = match dm_move {
        Move::Up => (x, y.wrapping_sub(1)),
        Move::Down => (x, y + 1),
        Move::Left => (x.wrapping_sub(1), y),
        Move::Right => (x + 1, y),
    };
    let position = if spec.is_wall(candidate) {
        position
    } else {
        candidate
    };
    let reached = spec.target_at(position);
    let bonus = match reached {
        Some(t) if t == rewarded_target => spec.win_reward,
        Some(_) => spec.lose_reward,
        None => 0.0,
    };
    GridOutcome {
        position,
        reward: spec.step_reward + bonus,
        reached,
    }
}

/// Episodic spatial friend-or-foe.
#[derive(Debug, Clone)]
pub struct GridWorld {
    spec: GridWorldSpec,
    scaling: RewardScaling,
    position: (usize, usize),
    steps: usize,
}

impl GridWorld {
    pub fn new(spec: GridWorldSpec, scaling: RewardScaling) -> Result<Self> {
        if spec.is_wall(spec.start) || spec.targets.iter().any(|t| spec.is_wall(*t)) {
            return Err(config("start and targets must be floor cells"));
        }
        if spec.targets[0] == spec.targets[1] || spec.targets.contains(&spec.start) {
            return Err(config("start and the two targets must be distinct cells"));
        }
        if spec.max_steps == 0 {
            return Err(config("max_steps must be positive"));
        }
        let position = spec.start;
        Ok(Self {
            spec,
            scaling,
            position,
            steps: 0,
        })
    }

    pub fn spec(&self) -> &GridWorldSpec {
        &self.spec
    }
}

impl Environment for GridWorld {
    fn id(&self) -> &'static str {
        "fof-grid"
    }

    fn dm_actions(&self) -> usize {
        4
    }

    fn opp_actions(&self) -> Vec<usize> {
        vec![2]
    }

    fn n_states(&self) -> usize {
        self.spec.width * self.spec.height
    }

    fn episodic(&self) -> bool {
        true
    }

    fn emits_opponent_reward(&self) -> bool {
        self.scaling != RewardScaling::Unobserved
    }

    fn reset(&mut self) -> StateId {
        self.position = self.spec.start;
        self.steps = 0;
        self.spec.state(self.position)
    }

    fn step(&mut self, dm_action: ActionId, opp_actions: &[ActionId]) -> Result<Experience> {
        let mv = Move::from_action(dm_action)
            .ok_or_else(|| contract(format!("move {dm_action} out of range")))?;
        let rewarded = *opp_actions
            .first()
            .ok_or_else(|| contract("gridworld needs one adversary action"))?;
        if rewarded > 1 {
            return Err(contract(format!("target {rewarded} out of range")));
        }
        let state = self.spec.state(self.position);
        let out = grid_step(&self.spec, self.position, mv, rewarded);
        self.position = out.position;
        self.steps += 1;
        let hit = out.reached.map(|t| t == rewarded);
        Ok(Experience {
            state,
            dm_action,
            opp_actions: vec![rewarded],
            reward_dm: out.reward,
            reward_opp: vec![self.scaling.opponent_reward(out.reward, hit)],
            next_state: self.spec.state(out.position),
            terminal: out.reached.is_some() || self.steps >= self.spec.max_steps,
        })
    }

    fn choice_signal(&self, e: &Experience) -> Option<Vec<f64>> {
        if !e.terminal {
            return None;
        }
        self.spec
            .target_at(self.spec.cell(e.next_state))
            .map(|t| onehot(2, t))
    }

    fn signal_len(&self) -> usize {
        2
    }
}
