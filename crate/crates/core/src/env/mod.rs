//! Episodic environments: ASCII mazes (gridworld and a small Pac-Man) and
//! explicit finite MDPs.

mod features;
mod finite;
mod maze;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::linear_fa::{ActionChoices, Encoding, LinearQ};
use crate::{Error, RandomStream, Result, Scalar};

pub use features::{HIGH_FEATURE_COUNT, LOW_FEATURE_COUNT};
pub use finite::{FiniteMdp, FiniteState, Outcome};
pub use maze::{Cell, GhostState, MazeEnv, MazeSpec, MazeState, GRIDWORLD_10, MINI_PACMAN};

/// One of the four maze moves.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ActionId(pub u8);

impl ActionId {
    pub const UP: ActionId = ActionId(0);
    pub const DOWN: ActionId = ActionId(1);
    pub const LEFT: ActionId = ActionId(2);
    pub const RIGHT: ActionId = ActionId(3);
    pub const ALL: [ActionId; 4] = [Self::UP, Self::DOWN, Self::LEFT, Self::RIGHT];

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn reverse(self) -> ActionId {
        match self {
            Self::UP => Self::DOWN,
            Self::DOWN => Self::UP,
            Self::LEFT => Self::RIGHT,
            Self::RIGHT => Self::LEFT,
            other => other,
        }
    }

    /// Row/column offset of a maze move.
    pub fn delta(self) -> (isize, isize) {
        match self {
            Self::UP => (-1, 0),
            Self::DOWN => (1, 0),
            Self::LEFT => (0, -1),
            Self::RIGHT => (0, 1),
            _ => (0, 0),
        }
    }
}

impl fmt::Display for ActionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Self::UP => f.write_str("up"),
            Self::DOWN => f.write_str("down"),
            Self::LEFT => f.write_str("left"),
            Self::RIGHT => f.write_str("right"),
            ActionId(i) => write!(f, "a{i}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepOutcome<St> {
    pub next: St,
    /// Game points earned by this step.
    pub reward: f64,
    /// The episode ended with this step.
    pub terminal: bool,
    /// The episode ended only because of the step cap; the next state is not absorbing.
    pub truncated: bool,
}

impl<St> StepOutcome<St> {
    /// True for absorbing terminal states, where learners bootstrap with zero.
    pub fn absorbing(&self) -> bool {
        self.terminal && !self.truncated
    }
}

/// Which representation an agent sees.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureMode {
    /// Seven object counts per distance band along the action direction.
    High,
    /// Sixteen per-direction nearest-object distances.
    Low,
    /// Exact (state, action) table.
    Tabular,
}

impl FeatureMode {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "high" => Ok(Self::High),
            "low" => Ok(Self::Low),
            "tabular" => Ok(Self::Tabular),
            other => Err(Error::Config(format!("unknown feature mode {other:?}"))),
        }
    }
}

pub trait Environment {
    type State: Clone + fmt::Debug;

    fn action_count(&self) -> usize;

    fn reset(&self, rng: &mut RandomStream) -> Self::State;

    fn step(
        &self,
        state: &Self::State,
        action: ActionId,
        rng: &mut RandomStream,
    ) -> StepOutcome<Self::State>;

    /// Legal actions in ascending index order. Never empty.
    fn legal_actions(&self, state: &Self::State) -> Vec<ActionId>;

    fn encode<S: Scalar>(
        &self,
        state: &Self::State,
        action: ActionId,
        mode: FeatureMode,
    ) -> Result<Encoding<S>>;

    /// Dense feature count for `High`/`Low`, or number of table states for `Tabular`.
    fn feature_len(&self, mode: FeatureMode) -> Result<usize>;

    /// Stable 64-bit digest of a state, used in step logs.
    fn digest(&self, state: &Self::State) -> u64;

    /// Legal actions of `state` paired with their encodings.
    fn choices<S: Scalar>(&self, state: &Self::State, mode: FeatureMode) -> Result<ActionChoices<S>> {
        let actions = self.legal_actions(state);
        let encodings = actions
            .iter()
            .map(|&a| self.encode(state, a, mode))
            .collect::<Result<Vec<_>>>()?;
        ActionChoices::new(actions, encodings)
    }

    /// Zero-initialized value function matching `mode`.
    fn new_q<S: Scalar>(&self, mode: FeatureMode) -> Result<LinearQ<S>> {
        let n = self.feature_len(mode)?;
        Ok(match mode {
            FeatureMode::Tabular => LinearQ::tabular(n, self.action_count()),
            FeatureMode::High | FeatureMode::Low => LinearQ::linear(n),
        })
    }
}

pub(crate) fn fnv_mix(h: &mut u64, x: u64) {
    for b in x.to_le_bytes() {
        *h ^= u64::from(b);
        *h = h.wrapping_mul(0x0100_0000_01b3);
    }
}

pub(crate) const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
