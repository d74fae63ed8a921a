//! Action-specific maze features.
//!
//! Distances are shortest-path lengths over the ghost graph measured from
//! the agent *through* the action's first step: `1 + d(next, x)` when the
//! move is legal, `d(agent, x)` when it is blocked.
//!
//! High mode (7 components):
//!
//! | # | objects | band | normalized by |
//! |---|---------|------|---------------|
//! | 0 | dangerous ghosts | d ≤ 2 | ghost count |
//! | 1 | dangerous ghosts | 3 ≤ d ≤ 5 | ghost count |
//! | 2 | edible ghosts | d ≤ 3 | ghost count |
//! | 3 | edible ghosts | 4 ≤ d ≤ 8 | ghost count |
//! | 4 | pellets | d ≤ 2 | agent cells in band |
//! | 5 | pellets | 3 ≤ d ≤ 6 | agent cells in band |
//! | 6 | power pills | d ≤ 6 | agent cells in band |
//!
//! Low mode (16 components): for each direction in the order
//! (action, reverse of action, then the two perpendicular moves in index
//! order), the distance to the nearest pellet, power pill, dangerous ghost
//! and edible ghost starting with a step in that direction, divided by
//! `diameter + 1`. Blocked directions and absent objects read 1.0.

use super::maze::{MazeEnv, MazeState, UNREACHABLE};
use super::ActionId;
use crate::linear_fa::FeatureVector;
use crate::Scalar;

pub const HIGH_FEATURE_COUNT: usize = 7;
pub const LOW_FEATURE_COUNT: usize = 16;

const GHOST_BANDS: [(u32, u32); 2] = [(0, 2), (3, 5)];
const EDIBLE_BANDS: [(u32, u32); 2] = [(0, 3), (4, 8)];
const PELLET_BANDS: [(u32, u32); 2] = [(0, 2), (3, 6)];
const PILL_BAND: (u32, u32) = (0, 6);

/// Distances from the agent through `action` to every node.
fn distances_via(env: &MazeEnv, agent: usize, action: ActionId) -> impl Fn(usize) -> u32 + '_ {
    let (origin, offset) = match env.agent_neighbor(agent, action) {
        Some(next) => (next, 1),
        None => (agent, 0),
    };
    move |node| {
        let d = env.distance(origin, node);
        if d == UNREACHABLE {
            u32::MAX
        } else {
            u32::from(d) + offset
        }
    }
}

fn ratio<S: Scalar>(count: usize, capacity: usize) -> S {
    if capacity == 0 {
        S::zero()
    } else {
        S::of((count as f64 / capacity as f64).min(1.0))
    }
}

pub(crate) fn high_features<S: Scalar>(env: &MazeEnv, s: &MazeState, action: ActionId) -> FeatureVector<S> {
    let dist = distances_via(env, s.agent, action);
    let within = |d: u32, (lo, hi): (u32, u32)| d >= lo && d <= hi;
    let ghosts = env.ghost_count();
    let ghost_band = |edible: bool, band| {
        s.ghosts.iter().filter(|g| g.edible == edible && within(dist(g.node), band)).count()
    };
    let cells_band = |band, items: &[bool]| {
        let mut count = 0;
        let mut capacity = 0;
        for node in 0..env.node_count() {
            if env.is_agent_cell(node) && within(dist(node), band) {
                capacity += 1;
                count += usize::from(items[node]);
            }
        }
        ratio::<S>(count, capacity)
    };
    let v = vec![
        ratio(ghost_band(false, GHOST_BANDS[0]), ghosts),
        ratio(ghost_band(false, GHOST_BANDS[1]), ghosts),
        ratio(ghost_band(true, EDIBLE_BANDS[0]), ghosts),
        ratio(ghost_band(true, EDIBLE_BANDS[1]), ghosts),
        cells_band(PELLET_BANDS[0], &s.pellets),
        cells_band(PELLET_BANDS[1], &s.pellets),
        cells_band(PILL_BAND, &s.pills),
    ];
    FeatureVector::new(v).expect("ratios lie in [0, 1]")
}

/// Relative direction order used by the low features.
pub(crate) fn low_directions(action: ActionId) -> [ActionId; 4] {
    match action {
        ActionId::UP | ActionId::DOWN => [action, action.reverse(), ActionId::LEFT, ActionId::RIGHT],
        _ => [action, action.reverse(), ActionId::UP, ActionId::DOWN],
    }
}

pub(crate) fn low_features<S: Scalar>(env: &MazeEnv, s: &MazeState, action: ActionId) -> FeatureVector<S> {
    let scale = f64::from(env.diameter()) + 1.0;
    let mut v = Vec::with_capacity(LOW_FEATURE_COUNT);
    for dir in low_directions(action) {
        let Some(next) = env.agent_neighbor(s.agent, dir) else {
            v.extend([S::one(); 4]);
            continue;
        };
        let d = |node: usize| 1 + u32::from(env.distance(next, node));
        let nearest = |it: &mut dyn Iterator<Item = usize>| {
            it.map(d).min().map_or(S::one(), |m| S::of((f64::from(m) / scale).min(1.0)))
        };
        v.push(nearest(&mut (0..env.node_count()).filter(|&n| s.pellets[n])));
        v.push(nearest(&mut (0..env.node_count()).filter(|&n| s.pills[n])));
        v.push(nearest(&mut s.ghosts.iter().filter(|g| !g.edible).map(|g| g.node)));
        v.push(nearest(&mut s.ghosts.iter().filter(|g| g.edible).map(|g| g.node)));
    }
    FeatureVector::new(v).expect("normalized distances lie in [0, 1]")
}
