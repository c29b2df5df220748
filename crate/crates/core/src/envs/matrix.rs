use crate::error::{contract, Result};
use crate::tabular::{ActionId, Experience, StateId};

use super::{onehot, Environment};

pub const COOPERATE: ActionId = 0;
pub const DEFECT: ActionId = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Memory {
    None,
    /// The state is the previous joint action, plus an initial state.
    One,
}

/// Payoff bimatrix of a 2x2 game. Row player is the decision maker.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixGameSpec {
    pub payoff_a: [[f64; 2]; 2],
    pub payoff_b: [[f64; 2]; 2],
    pub memory: Memory,
    pub labels: [&'static str; 2],
}

impl MatrixGameSpec {
    fn symmetric(payoff_a: [[f64; 2]; 2], memory: Memory) -> Self {
        let payoff_b = [
            [payoff_a[0][0], payoff_a[1][0]],
            [payoff_a[0][1], payoff_a[1][1]],
        ];
        Self {
            payoff_a,
            payoff_b,
            memory,
            labels: ["C", "D"],
        }
    }

    /// Prisoner's dilemma.
    pub fn prisoners_dilemma(memory: Memory) -> Self {
        Self::symmetric([[-1.0, -3.0], [0.0, -2.0]], memory)
    }

    pub fn stag_hunt(memory: Memory) -> Self {
        Self::symmetric([[2.0, 0.0], [1.0, 1.0]], memory)
    }

    pub fn chicken(memory: Memory) -> Self {
        Self::symmetric([[0.0, -2.0], [1.0, -4.0]], memory)
    }

    pub fn n_states(&self) -> usize {
        match self.memory {
            Memory::None => 1,
            Memory::One => 5,
        }
    }

    /// Successor state after joint action `(a, b)`.
    pub fn successor(&self, a: ActionId, b: ActionId) -> StateId {
        match self.memory {
            Memory::None => 0,
            Memory::One => 1 + 2 * a + b,
        }
    }

    pub fn step(&self, state: StateId, a: ActionId, b: ActionId) -> Result<Experience> {
        if a > 1 || b > 1 {
            return Err(contract(format!(
                "joint action ({a}, {b}) is not in {{C, D}}^2"
            )));
        }
        Ok(Experience {
            state,
            dm_action: a,
            opp_actions: vec![b],
            reward_dm: self.payoff_a[a][b],
            reward_opp: vec![self.payoff_b[a][b]],
            next_state: self.successor(a, b),
            terminal: false,
        })
    }
}

/// A repeated matrix game; never terminates.
#[derive(Debug, Clone)]
pub struct MatrixGame {
    id: &'static str,
    spec: MatrixGameSpec,
    state: StateId,
}

impl MatrixGame {
    pub fn new(id: &'static str, spec: MatrixGameSpec) -> Self {
        Self { id, spec, state: 0 }
    }

    pub fn spec(&self) -> &MatrixGameSpec {
        &self.spec
    }
}

impl Environment for MatrixGame {
    fn id(&self) -> &'static str {
        self.id
    }

    fn dm_actions(&self) -> usize {
        2
    }

    fn opp_actions(&self) -> Vec<usize> {
        vec![2]
    }

    fn n_states(&self) -> usize {
        self.spec.n_states()
    }

    fn episodic(&self) -> bool {
        false
    }

    fn reset(&mut self) -> StateId {
        self.state = 0;
        self.state
    }

    fn step(&mut self, dm_action: ActionId, opp_actions: &[ActionId]) -> Result<Experience> {
        let b = *opp_actions
            .first()
            .ok_or_else(|| contract("matrix game needs one adversary action"))?;
        let e = self.spec.step(self.state, dm_action, b)?;
        self.state = e.next_state;
        Ok(e)
    }

    fn choice_signal(&self, e: &Experience) -> Option<Vec<f64>> {
        Some(onehot(2, e.dm_action))
    }

    fn signal_len(&self) -> usize {
        2
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn payoffs_match_the_tables() {
        let ipd = MatrixGameSpec::prisoners_dilemma(Memory::None);
        let e = ipd.step(0, COOPERATE, COOPERATE).unwrap();
        assert_eq!((e.reward_dm, e.reward_opp[0]), (-1.0, -1.0));
        let e = ipd.step(0, COOPERATE, DEFECT).unwrap();
        assert_eq!((e.reward_dm, e.reward_opp[0]), (-3.0, 0.0));

        let ish = MatrixGameSpec::stag_hunt(Memory::None);
        let e = ish.step(0, COOPERATE, DEFECT).unwrap();
        assert_eq!((e.reward_dm, e.reward_opp[0]), (0.0, 1.0));

        let ic = MatrixGameSpec::chicken(Memory::None);
        let e = ic.step(0, DEFECT, DEFECT).unwrap();
        assert_eq!((e.reward_dm, e.reward_opp[0]), (-4.0, -4.0));
        let e = ic.step(0, DEFECT, COOPERATE).unwrap();
        assert_eq!((e.reward_dm, e.reward_opp[0]), (1.0, -2.0));
    }

    #[test]
    fn memory_one_state_space() {
        let mut env = MatrixGame::new("ipd-mem1", MatrixGameSpec::prisoners_dilemma(Memory::One));
        let mut seen = HashSet::new();
        seen.insert(env.reset());
        for (a, b) in [(0, 0), (0, 1), (1, 0), (1, 1), (0, 1), (1, 1)] {
            let e = env.step(a, &[b]).unwrap();
            assert_eq!(e.next_state, 1 + 2 * a + b);
            assert!(!e.terminal);
            seen.insert(e.next_state);
        }
        assert_eq!(seen.len(), 5);
    }

    #[test]
    fn rejects_unknown_actions() {
        let ipd = MatrixGameSpec::prisoners_dilemma(Memory::None);
        assert!(ipd.step(0, 2, 0).is_err());
    }
}
