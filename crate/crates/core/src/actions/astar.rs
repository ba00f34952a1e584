//! Grid A* over walk / jump / fall / pillar moves.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};

use serde::{Deserialize, Serialize};

use crate::world::{BlockKind, Cell, Dir, VoxelPatch, World};

/// Longest drop a single fall move may take.
pub const MAX_FALL: i32 = 3;
pub const PILLAR_COST: u32 = 2;
/// Pillar budgets above this are treated as this value.
const BUDGET_CAP: u32 = 24;

/// Terrain queries the planner needs. Cells the grid knows nothing about
/// must report neither solid nor passable.
pub trait NavGrid {
    fn solid(&self, c: Cell) -> bool;
    fn passable(&self, c: Cell) -> bool;
}

impl NavGrid for World {
    fn solid(&self, c: Cell) -> bool {
        self.in_bounds(c) && self.block(c).is_solid()
    }

    fn passable(&self, c: Cell) -> bool {
        self.is_passable(c)
    }
}

impl NavGrid for VoxelPatch {
    fn solid(&self, c: Cell) -> bool {
        self.get(c).is_some_and(BlockKind::is_solid)
    }

    fn passable(&self, c: Cell) -> bool {
        self.get(c) == Some(BlockKind::Air)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "move")]
pub enum Move {
    Walk { dir: Dir, to: Cell },
    Jump { dir: Dir, to: Cell },
    Fall { dir: Dir, to: Cell },
    /// Jump and place a block underneath.
    Pillar { to: Cell },
}

impl Move {
    pub fn to(self) -> Cell {
        match self {
            Move::Walk { to, .. } | Move::Jump { to, .. } | Move::Fall { to, .. } | Move::Pillar { to } => to,
        }
    }

    pub fn cost(self) -> u32 {
        match self {
            Move::Pillar { .. } => PILLAR_COST,
            _ => 1,
        }
    }
}

/// Where a path should end. Cells are feet positions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NavGoal {
    /// ℓ∞ distance from the feet cell below 2.
    Near(Cell),
    Exact(Cell),
    /// Standing anywhere in column (x, z).
    Column(i32, i32),
}

impl NavGoal {
    pub fn reached(self, c: Cell) -> bool {
        match self {
            NavGoal::Near(t) => c.chebyshev(t) < 2,
            NavGoal::Exact(t) => c == t,
            NavGoal::Column(x, z) => c.x == x && c.z == z,
        }
    }

    /// Lower bound on remaining cost: each move shifts at most one column,
    /// rises at most one block and drops at most `MAX_FALL`.
    pub fn heuristic(self, c: Cell) -> u32 {
        let (slack, t) = match self {
            NavGoal::Near(t) => (1, t),
            NavGoal::Exact(t) => (0, t),
            NavGoal::Column(x, z) => {
                return (c.x - x).abs().max((c.z - z).abs()) as u32;
            }
        };
        let horiz = (c.chebyshev_xz(t) - slack).max(0);
        let up = (t.y - c.y - slack).max(0);
        let down = (c.y - t.y - slack).max(0);
        let falls = (down + MAX_FALL - 1) / MAX_FALL;
        horiz.max(up).max(falls) as u32
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Path {
    pub moves: Vec<Move>,
    pub cost: u32,
    /// False when the path only leads to the cell closest to the goal.
    pub complete: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NoPath;

fn standable(g: &impl NavGrid, c: Cell) -> bool {
    g.passable(c) && g.passable(c.up()) && g.solid(c.down())
}

/// Successor moves from `c` in a fixed order.
pub fn successors(g: &impl NavGrid, c: Cell, can_pillar: bool) -> Vec<Move> {
    let mut out = Vec::with_capacity(9);
    let headroom = g.passable(c.up().up());
    for dir in Dir::ALL {
        let ahead = dir.step(c);
        if g.passable(ahead) && g.passable(ahead.up()) {
            if g.solid(ahead.down()) {
                out.push(Move::Walk { dir, to: ahead });
            } else {
                let mut land = ahead.down();
                let mut drop = 1;
                while drop <= MAX_FALL && g.passable(land) && !g.solid(land.down()) {
                    land = land.down();
                    drop += 1;
                }
                if drop <= MAX_FALL && g.passable(land) && g.solid(land.down()) {
                    out.push(Move::Fall { dir, to: land });
                }
            }
        } else if headroom && g.solid(ahead) && standable(g, ahead.up()) {
            out.push(Move::Jump { dir, to: ahead.up() });
        }
    }
    if can_pillar && headroom && g.passable(c) {
        out.push(Move::Pillar { to: c.up() });
    }
    out
}

/// A* from `start`. Returns the cheapest path when the goal is reachable,
/// otherwise a path to the explored cell with the smallest heuristic value,
/// or `NoPath` when no cell improves on the start.
pub fn plan(
    g: &impl NavGrid,
    start: Cell,
    goal: NavGoal,
    pillar_budget: u32,
) -> Result<Path, NoPath> {
    if goal.reached(start) {
        return Ok(Path {
            moves: Vec::new(),
            cost: 0,
            complete: true,
        });
    }
    let budget = pillar_budget.min(BUDGET_CAP);
    type Key = (Cell, u32);
    let mut open = BinaryHeap::new();
    let mut best_g: HashMap<Key, u32> = HashMap::new();
    let mut parent: HashMap<Key, (Key, Move)> = HashMap::new();
    let start_key = (start, 0u32);
    best_g.insert(start_key, 0);
    let mut counter = 0u64;
    open.push(Reverse((goal.heuristic(start), goal.heuristic(start), counter, 0u32, start_key)));
    let mut closest = (goal.heuristic(start), 0u32, start_key);

    while let Some(Reverse((_, h, _, gcost, key))) = open.pop() {
        if best_g.get(&key).is_some_and(|&b| b < gcost) {
            continue;
        }
        let (cell, used) = key;
        if goal.reached(cell) {
            return Ok(rebuild(&parent, key, gcost, true));
        }
        if (h, gcost) < (closest.0, closest.1) {
            closest = (h, gcost, key);
        }
        for m in successors(g, cell, used < budget) {
            let next_used = used + matches!(m, Move::Pillar { .. }) as u32;
            let nk = (m.to(), next_used);
            let ng = gcost + m.cost();
            if best_g.get(&nk).is_some_and(|&b| b <= ng) {
                continue;
            }
            best_g.insert(nk, ng);
            parent.insert(nk, (key, m));
            let nh = goal.heuristic(m.to());
            counter += 1;
            open.push(Reverse((ng + nh, nh, counter, ng, nk)));
        }
    }
    if closest.2 == start_key {
        return Err(NoPath);
    }
    Ok(rebuild(&parent, closest.2, closest.1, false))
}

type Parents = HashMap<(Cell, u32), ((Cell, u32), Move)>;

fn rebuild(
    parent: &Parents,
    mut key: (Cell, u32),
    cost: u32,
    complete: bool,
) -> Path {
    let mut moves = Vec::new();
    while let Some(&(prev, m)) = parent.get(&key) {
        moves.push(m);
        key = prev;
    }
    moves.reverse();
    Path {
        moves,
        cost,
        complete,
    }
}
