use crate::error::{config, contract, Result};
use crate::tabular::{ActionId, Experience, StateId};

use super::Environment;

/// Parameters of the defender-vs-attackers allocation game.
#[derive(Debug, Clone, PartialEq)]
pub struct BlottoSpec {
    pub positions: usize,
    pub dm_resources: u32,
    pub attackers: usize,
    pub position_value: f64,
}

impl Default for BlottoSpec {
    fn default() -> Self {
        Self {
            positions: 3,
            dm_resources: 2,
            attackers: 2,
            position_value: 1.0,
        }
    }
}

impl BlottoSpec {
    pub fn validate(&self) -> Result<()> {
        if self.positions == 0 || self.attackers == 0 || self.dm_resources == 0 {
            return Err(config("Blotto needs positions, attackers and resources"));
        }
        if self.positions > 8 || self.dm_resources > 8 || self.attackers > 4 {
            return Err(config(
                "Blotto sizes beyond 8 positions/resources or 4 attackers",
            ));
        }
        Ok(())
    }

    /// Every way to split the resources over the positions, lexicographic order.
    pub fn allocations(&self) -> Vec<Vec<u32>> {
        fn fill(left: u32, slots: usize, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
            if slots == 1 {
                prefix.push(left);
                out.push(prefix.clone());
                prefix.pop();
                return;
            }
            for x in 0..=left {
                prefix.push(x);
                fill(left - x, slots - 1, prefix, out);
                prefix.pop();
            }
        }
        let mut out = Vec::new();
        fill(self.dm_resources, self.positions, &mut Vec::new(), &mut out);
        out
    }
}

/// Rewards for one round: the defender's total and each attacker's share.
///
/// At every attacked position with `d` defending resources and `k` attackers,
/// `d > k` wins the position value for the defender and charges each attacker
/// `value / k`; `d < k` does the opposite; a draw pays nothing.
pub fn blotto_rewards(
    spec: &BlottoSpec,
    allocation: &[u32],
    attacks: &[usize],
) -> Result<(f64, Vec<f64>)> {
    if allocation.len() != spec.positions || allocation.iter().sum::<u32>() != spec.dm_resources {
        return Err(contract(format!(
            "allocation {allocation:?} must spread {} resources over {} positions",
            spec.dm_resources, spec.positions
        )));
    }
    if attacks.len() != spec.attackers || attacks.iter().any(|p| *p >= spec.positions) {
        return Err(contract(format!("invalid attacks {attacks:?}")));
    }
    let mut dm = 0.0;
    let mut attackers = vec![0.0; attacks.len()];
    for (position, &d) in allocation.iter().enumerate() {
        let k = attacks.iter().filter(|p| **p == position).count();
        if k == 0 {
            continue;
        }
        let d = d as usize;
        let sign = match d.cmp(&k) {
            std::cmp::Ordering::Greater => 1.0,
            std::cmp::Ordering::Less => -1.0,
            std::cmp::Ordering::Equal => continue,
        };
        dm += sign * spec.position_value;
        let share = spec.position_value / k as f64;
        for (r, p) in attackers.iter_mut().zip(attacks) {
            if *p == position {
                *r -= sign * share;
            }
        }
    }
    Ok((dm, attackers))
}

/// Single-state repeated Blotto game.
#[derive(Debug, Clone)]
pub struct Blotto {
    spec: BlottoSpec,
    allocations: Vec<Vec<u32>>,
}

impl Blotto {
    pub fn new(spec: BlottoSpec) -> Result<Self> {
        spec.validate()?;
        let allocations = spec.allocations();
        Ok(Self { spec, allocations })
    }

    pub fn spec(&self) -> &BlottoSpec {
        &self.spec
    }

    pub fn allocation(&self, action: ActionId) -> Option<&[u32]> {
        self.allocations.get(action).map(Vec::as_slice)
    }
}

impl Environment for Blotto {
    fn id(&self) -> &'static str {
        "blotto"
    }

    fn dm_actions(&self) -> usize {
        self.allocations.len()
    }

    fn opp_actions(&self) -> Vec<usize> {
        vec![self.spec.positions; self.spec.attackers]
    }

    fn n_states(&self) -> usize {
        1
    }

    fn episodic(&self) -> bool {
        false
    }

    fn reset(&mut self) -> StateId {
        0
    }

    fn step(&mut self, dm_action: ActionId, opp_actions: &[ActionId]) -> Result<Experience> {
        let allocation = self
            .allocation(dm_action)
            .ok_or_else(|| contract(format!("allocation index {dm_action} out of range")))?;
        let (reward_dm, reward_opp) = blotto_rewards(&self.spec, allocation, opp_actions)?;
        Ok(Experience {
            state: 0,
            dm_action,
            opp_actions: opp_actions.to_vec(),
            reward_dm,
            reward_opp,
            next_state: 0,
            terminal: false,
        })
    }

    /// The defender's allocation as a share of her resources per position.
    fn choice_signal(&self, e: &Experience) -> Option<Vec<f64>> {
        let total = f64::from(self.spec.dm_resources);
        self.allocation(e.dm_action)
            .map(|a| a.iter().map(|x| f64::from(*x) / total).collect())
    }

    fn signal_len(&self) -> usize {
        self.spec.positions
    }
}
