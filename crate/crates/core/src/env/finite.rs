//! Explicit finite MDPs for oracle tests (chains, cycles, small unichains).

use super::{fnv_mix, ActionId, Environment, FeatureMode, StepOutcome, FNV_OFFSET};
use crate::linear_fa::Encoding;
use crate::{Error, RandomStream, Result, Scalar};

/// One possible result of taking an action.
#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub prob: f64,
    pub next: usize,
    pub reward: f64,
}

/// Finite MDP with explicit transition lists. `transitions[s][a]` lists the
/// outcomes of action `a` in state `s`; an empty list marks `a` illegal.
#[derive(Clone, Debug)]
pub struct FiniteMdp {
    transitions: Vec<Vec<Vec<Outcome>>>,
    action_count: usize,
    start: usize,
    terminal: Vec<bool>,
    episode_cap: u32,
}

/// State of a [`FiniteMdp`] episode.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct FiniteState {
    pub id: usize,
    pub step: u32,
}

impl FiniteMdp {
    pub fn new(
        transitions: Vec<Vec<Vec<Outcome>>>,
        start: usize,
        terminal: Vec<bool>,
        episode_cap: u32,
    ) -> Result<Self> {
        let n = transitions.len();
        let action_count = transitions.iter().map(Vec::len).max().unwrap_or(0);
        if n == 0 || action_count == 0 || start >= n || terminal.len() != n || episode_cap == 0 {
            return Err(Error::Config("malformed finite MDP".into()));
        }
        for (s, row) in transitions.iter().enumerate() {
            if !terminal[s] && row.iter().all(Vec::is_empty) {
                return Err(Error::Config(format!("state {s} has no legal action")));
            }
            for outcomes in row {
                if outcomes.is_empty() {
                    continue;
                }
                let total: f64 = outcomes.iter().map(|o| o.prob).sum();
                if (total - 1.0).abs() > 1e-9 || outcomes.iter().any(|o| o.next >= n || o.prob < 0.0) {
                    return Err(Error::Config(format!("bad outcome distribution in state {s}")));
                }
            }
        }
        Ok(Self { transitions, action_count, start, terminal, episode_cap })
    }

    /// Deterministic single-action cycle `0 → 1 → … → n-1 → 0` paying
    /// `rewards[s]` on leaving state `s`.
    pub fn cycle(rewards: &[f64], episode_cap: u32) -> Result<Self> {
        let n = rewards.len();
        let transitions = (0..n)
            .map(|s| vec![vec![Outcome { prob: 1.0, next: (s + 1) % n, reward: rewards[s] }]])
            .collect();
        Self::new(transitions, 0, vec![false; n], episode_cap)
    }

    pub fn state_count(&self) -> usize {
        self.transitions.len()
    }

    pub fn outcomes(&self, state: usize, action: ActionId) -> &[Outcome] {
        self.transitions[state].get(action.index()).map_or(&[], Vec::as_slice)
    }

    pub fn is_terminal(&self, state: usize) -> bool {
        self.terminal[state]
    }

    pub fn start(&self) -> usize {
        self.start
    }
}

impl Environment for FiniteMdp {
    type State = FiniteState;

    fn action_count(&self) -> usize {
        self.action_count
    }

    fn reset(&self, _rng: &mut RandomStream) -> FiniteState {
        FiniteState { id: self.start, step: 0 }
    }

    fn step(&self, state: &FiniteState, action: ActionId, rng: &mut RandomStream) -> StepOutcome<FiniteState> {
        let outcomes = self.outcomes(state.id, action);
        let step = state.step + 1;
        let capped = step >= self.episode_cap;
        if outcomes.is_empty() {
            let next = FiniteState { id: state.id, step };
            return StepOutcome { next, reward: 0.0, terminal: capped, truncated: capped };
        }
        let u = rng.unit();
        let mut acc = 0.0;
        let mut chosen = &outcomes[outcomes.len() - 1];
        for o in outcomes {
            acc += o.prob;
            if u < acc {
                chosen = o;
                break;
            }
        }
        let absorbing = self.terminal[chosen.next];
        StepOutcome {
            next: FiniteState { id: chosen.next, step },
            reward: chosen.reward,
            terminal: absorbing || capped,
            truncated: capped && !absorbing,
        }
    }

    fn legal_actions(&self, state: &FiniteState) -> Vec<ActionId> {
        let legal: Vec<ActionId> = (0..self.action_count)
            .filter(|&a| !self.outcomes(state.id, ActionId(a as u8)).is_empty())
            .map(|a| ActionId(a as u8))
            .collect();
        if legal.is_empty() {
            vec![ActionId(0)]
        } else {
            legal
        }
    }

    fn encode<S: Scalar>(&self, state: &FiniteState, action: ActionId, mode: FeatureMode) -> Result<Encoding<S>> {
        match mode {
            FeatureMode::Tabular => Ok(Encoding::tabular(state.id, action, self.action_count)),
            _ => Err(Error::Config("finite MDPs only support tabular features".into())),
        }
    }

    fn feature_len(&self, mode: FeatureMode) -> Result<usize> {
        match mode {
            FeatureMode::Tabular => Ok(self.state_count()),
            _ => Err(Error::Config("finite MDPs only support tabular features".into())),
        }
    }

    fn digest(&self, state: &FiniteState) -> u64 {
        let mut h = FNV_OFFSET;
        fnv_mix(&mut h, state.id as u64);
        fnv_mix(&mut h, u64::from(state.step));
        h
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cycle_walks_states() {
        let mdp = FiniteMdp::cycle(&[0.0, 2.0], 10).unwrap();
        let mut rng = RandomStream::new(0);
        let s = mdp.reset(&mut rng);
        let a = mdp.step(&s, ActionId(0), &mut rng);
        assert_eq!((a.next.id, a.reward), (1, 0.0));
        let b = mdp.step(&a.next, ActionId(0), &mut rng);
        assert_eq!((b.next.id, b.reward), (0, 2.0));
    }

    #[test]
    fn rejects_bad_probabilities() {
        let t = vec![vec![vec![Outcome { prob: 0.5, next: 0, reward: 0.0 }]]];
        assert!(FiniteMdp::new(t, 0, vec![false], 5).is_err());
    }

    #[test]
    fn stochastic_frequencies() {
        let t = vec![
            vec![vec![
                Outcome { prob: 0.25, next: 0, reward: 0.0 },
                Outcome { prob: 0.75, next: 1, reward: 1.0 },
            ]],
            vec![vec![Outcome { prob: 1.0, next: 0, reward: 0.0 }]],
        ];
        let mdp = FiniteMdp::new(t, 0, vec![false, false], 1_000_000).unwrap();
        let mut rng = RandomStream::new(9);
        let s = mdp.reset(&mut rng);
        let hits = (0..20_000).filter(|_| mdp.step(&s, ActionId(0), &mut rng).next.id == 1).count();
        let p = hits as f64 / 20_000.0;
        assert!((p - 0.75).abs() < 0.02, "{p}");
    }
}
