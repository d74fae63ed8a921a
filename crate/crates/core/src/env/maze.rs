//! ASCII mazes covering both the goal/damage gridworld and Pac-Man rules.
//!
//! File format: a header line of `key=value` pairs, then one character per
//! cell:
//!
//! | char | cell |
//! |------|------|
//! | `#`  | wall |
//! | ` `  | corridor |
//! | `.`  | food pellet (10 points) |
//! | `o`  | power pill (50 points, ghosts become edible) |
//! | `P`  | agent spawn |
//! | `G`  | ghost spawn (ghost-only, like the lair) |
//! | `L`  | lair, where eaten ghosts respawn (ghost-only) |
//! | `X`  | goal (absorbing) |
//! | `D`  | damage (absorbing) |
//!
//! Header keys: `ghost_chase` (default 0.8), `episode_cap` (2000),
//! `power_duration` (40), `step_reward` (0), `goal_reward` (100),
//! `damage_reward` (-100). Cells outside the drawn rows are walls.

use std::collections::VecDeque;
use std::fs;
use std::path::Path;

use super::features::{high_features, low_features, HIGH_FEATURE_COUNT, LOW_FEATURE_COUNT};
use super::{fnv_mix, ActionId, Environment, FeatureMode, StepOutcome, FNV_OFFSET};
use crate::linear_fa::Encoding;
use crate::{Error, RandomStream, Result, Scalar};

/// 10×10 goal/damage world (inside a wall border): −1 per step, +100 goal, −100 damage.
pub const GRIDWORLD_10: &str = "\
ghost_chase=0.8 episode_cap=100 step_reward=-1 goal_reward=100 damage_reward=-100
############
#P         #
#  ##   D  #
#  #  D    #
#  #    ## #
#     #    #
# D   #  D #
#     ## # #
#  D       #
# ###  D # #
#        #X#
############
";

/// 15×15 Pac-Man maze with two ghosts and four power pills.
pub const MINI_PACMAN: &str = "\
ghost_chase=0.8 episode_cap=2000 power_duration=40
###############
#o.....#.....o#
#.##.#.#.#.##.#
#.............#
#.##.##L##.##.#
#....#LGL#....#
####.#LGL#.####
#....#####....#
#.##.......##.#
#....##.##....#
##.#.......#.##
#..#.##.##.#..#
#o.....P.....o#
#.###.#.#.###.#
###############
";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cell {
    Wall,
    Corridor,
    Pellet,
    PowerPill,
    Spawn,
    GhostSpawn,
    Lair,
    Goal,
    Damage,
}

impl Cell {
    fn parse(c: char) -> Option<Cell> {
        Some(match c {
            '#' => Cell::Wall,
            ' ' => Cell::Corridor,
            '.' => Cell::Pellet,
            'o' => Cell::PowerPill,
            'P' => Cell::Spawn,
            'G' => Cell::GhostSpawn,
            'L' => Cell::Lair,
            'X' => Cell::Goal,
            'D' => Cell::Damage,
            _ => return None,
        })
    }

    fn agent_walkable(self) -> bool {
        !matches!(self, Cell::Wall | Cell::Lair | Cell::GhostSpawn)
    }
}

/// Parsed maze layout and rules.
#[derive(Clone, Debug, PartialEq)]
pub struct MazeSpec {
    pub rows: usize,
    pub cols: usize,
    pub grid: Vec<Cell>,
    pub ghost_chase: f64,
    pub episode_cap: u32,
    pub power_duration: u32,
    pub step_reward: f64,
    pub goal_reward: f64,
    pub damage_reward: f64,
}

impl MazeSpec {
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or(Error::Maze { line: 1, msg: "empty maze file".into() })?;
        let mut spec = MazeSpec {
            rows: 0,
            cols: 0,
            grid: Vec::new(),
            ghost_chase: 0.8,
            episode_cap: 2000,
            power_duration: 40,
            step_reward: 0.0,
            goal_reward: 100.0,
            damage_reward: -100.0,
        };
        for pair in header.split(|c: char| c.is_whitespace() || c == ',').filter(|p| !p.is_empty()) {
            let (key, value) = pair.split_once('=').ok_or_else(|| Error::Maze {
                line: 1,
                msg: format!("header entry {pair:?} is not key=value"),
            })?;
            let bad = |what: &str| Error::Maze { line: 1, msg: format!("{key}: {what} ({value:?})") };
            let num = || value.parse::<f64>().map_err(|_| bad("not a number"));
            let int = || value.parse::<u32>().map_err(|_| bad("not a non-negative integer"));
            match key {
                "ghost_chase" => spec.ghost_chase = num()?,
                "episode_cap" => spec.episode_cap = int()?,
                "power_duration" => spec.power_duration = int()?,
                "step_reward" => spec.step_reward = num()?,
                "goal_reward" => spec.goal_reward = num()?,
                "damage_reward" => spec.damage_reward = num()?,
                _ => return Err(bad("unknown key")),
            }
        }
        if !(0.0..=1.0).contains(&spec.ghost_chase) {
            return Err(Error::Maze { line: 1, msg: "ghost_chase must be in [0, 1]".into() });
        }
        if spec.episode_cap == 0 {
            return Err(Error::Maze { line: 1, msg: "episode_cap must be positive".into() });
        }

        let rows: Vec<&str> = lines.collect();
        let rows: Vec<&str> = match rows.iter().rposition(|r| !r.trim().is_empty()) {
            Some(last) => rows[..=last].to_vec(),
            None => Vec::new(),
        };
        spec.rows = rows.len();
        spec.cols = rows.iter().map(|r| r.chars().count()).max().unwrap_or(0);
        spec.grid = vec![Cell::Wall; spec.rows * spec.cols];
        for (r, row) in rows.iter().enumerate() {
            for (c, ch) in row.chars().enumerate() {
                spec.grid[r * spec.cols + c] = Cell::parse(ch).ok_or_else(|| Error::Maze {
                    line: r + 2,
                    msg: format!("unknown cell character {ch:?} at column {}", c + 1),
                })?;
            }
        }
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn cell(&self, row: usize, col: usize) -> Cell {
        self.grid[row * self.cols + col]
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GhostState {
    /// Node index.
    pub node: usize,
    pub prev_move: Option<ActionId>,
    pub edible: bool,
}

/// Complete maze state. Positions are node indices of the maze graph.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MazeState {
    pub agent: usize,
    pub ghosts: Vec<GhostState>,
    pub pellets: Vec<bool>,
    pub pills: Vec<bool>,
    pub power_left: u32,
    /// Ghosts eaten during the current power pill.
    pub ghost_chain: u32,
    pub step: u32,
}

/// Maze environment. Nodes are the non-wall cells in row-major order.
#[derive(Clone, Debug)]
pub struct MazeEnv {
    spec: MazeSpec,
    /// Grid coordinates of each node.
    coords: Vec<(usize, usize)>,
    kinds: Vec<Cell>,
    /// `neighbors[node][action]` over the ghost graph (every non-wall cell).
    neighbors: Vec<[Option<usize>; 4]>,
    /// Shortest-path lengths over the ghost graph, `dist[a * n + b]`.
    dist: Vec<u16>,
    diameter: u16,
    spawn: usize,
    ghost_spawns: Vec<usize>,
    lair: Option<usize>,
    pellet_count: usize,
    pill_count: usize,
}

pub(crate) const UNREACHABLE: u16 = u16::MAX;

impl MazeEnv {
    pub fn new(spec: MazeSpec) -> Result<Self> {
        let mut node_of = vec![usize::MAX; spec.grid.len()];
        let mut coords = Vec::new();
        let mut kinds = Vec::new();
        for r in 0..spec.rows {
            for c in 0..spec.cols {
                let cell = spec.cell(r, c);
                if cell != Cell::Wall {
                    node_of[r * spec.cols + c] = coords.len();
                    coords.push((r, c));
                    kinds.push(cell);
                }
            }
        }
        let n = coords.len();
        if n == 0 {
            return Err(Error::Maze { line: 2, msg: "maze has no open cells".into() });
        }
        let neighbors: Vec<[Option<usize>; 4]> = coords
            .iter()
            .map(|&(r, c)| {
                ActionId::ALL.map(|a| {
                    let (dr, dc) = a.delta();
                    let (nr, nc) = (r as isize + dr, c as isize + dc);
                    if nr < 0 || nc < 0 || nr as usize >= spec.rows || nc as usize >= spec.cols {
                        return None;
                    }
                    let idx = node_of[nr as usize * spec.cols + nc as usize];
                    (idx != usize::MAX).then_some(idx)
                })
            })
            .collect();

        let spawns: Vec<usize> = (0..n).filter(|&i| kinds[i] == Cell::Spawn).collect();
        if spawns.len() != 1 {
            return Err(Error::Maze {
                line: 2,
                msg: format!("expected exactly one agent spawn 'P', found {}", spawns.len()),
            });
        }
        let ghost_spawns: Vec<usize> = (0..n).filter(|&i| kinds[i] == Cell::GhostSpawn).collect();
        let lair = (0..n).find(|&i| kinds[i] == Cell::Lair);

        let mut dist = vec![UNREACHABLE; n * n];
        let mut queue = VecDeque::new();
        for src in 0..n {
            let row = &mut dist[src * n..(src + 1) * n];
            row[src] = 0;
            queue.clear();
            queue.push_back(src);
            while let Some(u) = queue.pop_front() {
                for v in neighbors[u].iter().flatten() {
                    if row[*v] == UNREACHABLE {
                        row[*v] = row[u] + 1;
                        queue.push_back(*v);
                    }
                }
            }
        }
        if dist[..n].contains(&UNREACHABLE) {
            let (r, c) = coords[dist[..n].iter().position(|&d| d == UNREACHABLE).unwrap()];
            return Err(Error::Maze {
                line: r + 2,
                msg: format!("cell at column {} is not connected to the rest of the maze", c + 1),
            });
        }
        // the agent must reach every agent-walkable cell without crossing ghost-only cells
        let mut seen = vec![false; n];
        seen[spawns[0]] = true;
        queue.clear();
        queue.push_back(spawns[0]);
        while let Some(u) = queue.pop_front() {
            for &v in neighbors[u].iter().flatten() {
                if !seen[v] && kinds[v].agent_walkable() && !matches!(kinds[u], Cell::Goal | Cell::Damage) {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        if let Some(i) = (0..n).find(|&i| kinds[i].agent_walkable() && !seen[i]) {
            let (r, c) = coords[i];
            return Err(Error::Maze {
                line: r + 2,
                msg: format!("cell at column {} is unreachable from the spawn", c + 1),
            });
        }
        let diameter = dist.iter().copied().max().unwrap_or(0);
        let pellet_count = kinds.iter().filter(|&&k| k == Cell::Pellet).count();
        let pill_count = kinds.iter().filter(|&&k| k == Cell::PowerPill).count();
        Ok(Self {
            spec,
            coords,
            kinds,
            neighbors,
            dist,
            diameter,
            spawn: spawns[0],
            ghost_spawns,
            lair,
            pellet_count,
            pill_count,
        })
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::new(MazeSpec::parse(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::new(MazeSpec::load(path)?)
    }

    /// Bundled maze by name (`gridworld-10`, `mini-pacman`) or a maze file path.
    pub fn named(name: &str) -> Result<Self> {
        match name {
            "gridworld-10" => Self::parse(GRIDWORLD_10),
            "mini-pacman" => Self::parse(MINI_PACMAN),
            path => Self::load(Path::new(path)),
        }
    }

    pub fn spec(&self) -> &MazeSpec {
        &self.spec
    }

    pub fn node_count(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self, node: usize) -> (usize, usize) {
        self.coords[node]
    }

    pub fn node_at(&self, row: usize, col: usize) -> Option<usize> {
        self.coords.iter().position(|&rc| rc == (row, col))
    }

    pub fn kind(&self, node: usize) -> Cell {
        self.kinds[node]
    }

    pub fn is_agent_cell(&self, node: usize) -> bool {
        self.kinds[node].agent_walkable()
    }

    pub fn ghost_count(&self) -> usize {
        self.ghost_spawns.len()
    }

    pub fn pellet_count(&self) -> usize {
        self.pellet_count
    }

    pub fn pill_count(&self) -> usize {
        self.pill_count
    }

    pub fn spawn(&self) -> usize {
        self.spawn
    }

    pub fn lair(&self) -> Option<usize> {
        self.lair
    }

    pub fn distance(&self, a: usize, b: usize) -> u16 {
        self.dist[a * self.coords.len() + b]
    }

    pub fn diameter(&self) -> u16 {
        self.diameter
    }

    /// Neighbor over the ghost graph.
    pub fn neighbor(&self, node: usize, action: ActionId) -> Option<usize> {
        self.neighbors[node][action.index()]
    }

    /// Neighbor the agent may enter.
    pub fn agent_neighbor(&self, node: usize, action: ActionId) -> Option<usize> {
        self.neighbor(node, action).filter(|&v| self.kinds[v].agent_walkable())
    }

    pub fn ghost_moves(&self, node: usize) -> Vec<ActionId> {
        ActionId::ALL.into_iter().filter(|&a| self.neighbor(node, a).is_some()).collect()
    }

    /// True when the state is fully described by the agent position, so the
    /// tabular representation is exact.
    pub fn is_positional(&self) -> bool {
        self.ghost_spawns.is_empty() && self.pellet_count == 0 && self.pill_count == 0
    }

    /// Upper bound on an episode score: every pellet, every pill, every ghost
    /// eaten once per pill with doubling values (an eaten ghost respawns
    /// inedible), plus the goal reward.
    pub fn score_bound(&self) -> f64 {
        let g = self.ghost_spawns.len() as i32;
        let chain = 200.0 * (2f64.powi(g) - 1.0);
        let goal = if self.kinds.contains(&Cell::Goal) { self.spec.goal_reward.max(0.0) } else { 0.0 };
        self.pellet_count as f64 * 10.0 + self.pill_count as f64 * (50.0 + chain) + goal
    }

    fn respawn_node(&self, ghost: usize) -> usize {
        self.lair.unwrap_or(self.ghost_spawns[ghost])
    }

    /// Move chosen by a chasing ghost: shortest path toward the agent, ties
    /// to the lowest action index. Edible ghosts flee (longest distance).
    pub fn chase_move(&self, ghost_node: usize, agent: usize, fleeing: bool) -> ActionId {
        let moves = self.ghost_moves(ghost_node);
        let mut best = moves[0];
        let mut best_d = self.distance(self.neighbor(ghost_node, best).unwrap(), agent);
        for &m in &moves[1..] {
            let d = self.distance(self.neighbor(ghost_node, m).unwrap(), agent);
            if (fleeing && d > best_d) || (!fleeing && d < best_d) {
                best = m;
                best_d = d;
            }
        }
        best
    }

    /// Sample one ghost move: chase (or flee) with probability `ghost_chase`,
    /// otherwise uniform over the legal moves.
    pub fn sample_ghost_move(&self, ghost: &GhostState, agent: usize, rng: &mut RandomStream) -> ActionId {
        if rng.unit() < self.spec.ghost_chase {
            self.chase_move(ghost.node, agent, ghost.edible)
        } else {
            let moves = self.ghost_moves(ghost.node);
            moves[rng.below(moves.len())]
        }
    }

    /// Resolve agent/ghost contacts; returns points earned and whether the agent was caught.
    fn collide(&self, s: &mut MazeState) -> (f64, bool) {
        let mut reward = 0.0;
        for i in 0..s.ghosts.len() {
            if s.ghosts[i].node != s.agent {
                continue;
            }
            if s.ghosts[i].edible {
                reward += 200.0 * f64::from(1u32 << s.ghost_chain.min(30));
                s.ghost_chain += 1;
                s.ghosts[i] = GhostState { node: self.respawn_node(i), prev_move: None, edible: false };
            } else {
                return (reward, true);
            }
        }
        (reward, false)
    }

    /// Mirror a state left-to-right. Returns `None` if the maze is not
    /// mirror-symmetric at some occupied cell.
    pub fn mirror_node(&self, node: usize) -> Option<usize> {
        let (r, c) = self.coords[node];
        self.node_at(r, self.spec.cols - 1 - c)
    }
}

impl Environment for MazeEnv {
    type State = MazeState;

    fn action_count(&self) -> usize {
        4
    }

    fn reset(&self, _rng: &mut RandomStream) -> MazeState {
        MazeState {
            agent: self.spawn,
            ghosts: self
                .ghost_spawns
                .iter()
                .map(|&node| GhostState { node, prev_move: None, edible: false })
                .collect(),
            pellets: self.kinds.iter().map(|&k| k == Cell::Pellet).collect(),
            pills: self.kinds.iter().map(|&k| k == Cell::PowerPill).collect(),
            power_left: 0,
            ghost_chain: 0,
            step: 0,
        }
    }

    fn step(&self, state: &MazeState, action: ActionId, rng: &mut RandomStream) -> StepOutcome<MazeState> {
        let mut s = state.clone();
        let mut reward = 0.0;
        // illegal moves leave the agent in place
        if let Some(next) = self.agent_neighbor(s.agent, action) {
            s.agent = next;
        }
        let mut absorbed = false;
        if s.pellets[s.agent] {
            s.pellets[s.agent] = false;
            reward += 10.0;
        }
        if s.pills[s.agent] {
            s.pills[s.agent] = false;
            reward += 50.0;
            s.power_left = self.spec.power_duration;
            s.ghost_chain = 0;
            for g in &mut s.ghosts {
                g.edible = true;
            }
        }
        match self.kinds[s.agent] {
            Cell::Goal => {
                reward += self.spec.goal_reward;
                absorbed = true;
            }
            Cell::Damage => {
                reward += self.spec.damage_reward;
                absorbed = true;
            }
            _ => reward += self.spec.step_reward,
        }

        let (points, mut caught) = self.collide(&mut s);
        reward += points;
        if !caught && !absorbed {
            for i in 0..s.ghosts.len() {
                let g = &s.ghosts[i];
                // edible ghosts move every other step
                if g.edible && s.step % 2 == 1 {
                    continue;
                }
                let m = self.sample_ghost_move(g, s.agent, rng);
                let node = self.neighbor(g.node, m).expect("ghost moves are legal");
                s.ghosts[i].node = node;
                s.ghosts[i].prev_move = Some(m);
            }
            let (points, c) = self.collide(&mut s);
            reward += points;
            caught = c;
        }
        if s.power_left > 0 {
            s.power_left -= 1;
            if s.power_left == 0 {
                s.ghost_chain = 0;
                for g in &mut s.ghosts {
                    g.edible = false;
                }
            }
        }
        s.step += 1;
        let absorbing = caught || absorbed;
        let capped = s.step >= self.spec.episode_cap;
        StepOutcome { next: s, reward, terminal: absorbing || capped, truncated: capped && !absorbing }
    }

    fn legal_actions(&self, state: &MazeState) -> Vec<ActionId> {
        let legal: Vec<ActionId> = ActionId::ALL
            .into_iter()
            .filter(|&a| self.agent_neighbor(state.agent, a).is_some())
            .collect();
        if legal.is_empty() {
            // isolated cell: staying put is the only move
            vec![ActionId::UP]
        } else {
            legal
        }
    }

    fn encode<S: Scalar>(&self, state: &MazeState, action: ActionId, mode: FeatureMode) -> Result<Encoding<S>> {
        match mode {
            FeatureMode::High => Ok(Encoding::Dense(high_features(self, state, action))),
            FeatureMode::Low => Ok(Encoding::Dense(low_features(self, state, action))),
            FeatureMode::Tabular => {
                if !self.is_positional() {
                    return Err(Error::Config(
                        "tabular features need a maze without ghosts, pellets or pills".into(),
                    ));
                }
                Ok(Encoding::tabular(state.agent, action, 4))
            }
        }
    }

    fn feature_len(&self, mode: FeatureMode) -> Result<usize> {
        match mode {
            FeatureMode::High => Ok(HIGH_FEATURE_COUNT),
            FeatureMode::Low => Ok(LOW_FEATURE_COUNT),
            FeatureMode::Tabular if self.is_positional() => Ok(self.node_count()),
            FeatureMode::Tabular => Err(Error::Config(
                "tabular features need a maze without ghosts, pellets or pills".into(),
            )),
        }
    }

    fn digest(&self, s: &MazeState) -> u64 {
        let mut h = FNV_OFFSET;
        fnv_mix(&mut h, s.agent as u64);
        for g in &s.ghosts {
            fnv_mix(&mut h, g.node as u64);
            fnv_mix(&mut h, g.prev_move.map_or(9, |m| u64::from(m.0)));
            fnv_mix(&mut h, u64::from(g.edible));
        }
        for (i, (&p, &o)) in s.pellets.iter().zip(&s.pills).enumerate() {
            if p || o {
                fnv_mix(&mut h, (i as u64) << 2 | u64::from(p) << 1 | u64::from(o));
            }
        }
        fnv_mix(&mut h, u64::from(s.power_left));
        fnv_mix(&mut h, u64::from(s.ghost_chain));
        fnv_mix(&mut h, u64::from(s.step));
        h
    }
}
