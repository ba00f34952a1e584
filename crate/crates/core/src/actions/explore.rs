//! Searching for an object until it shows up in the LiDAR scan.

use std::collections::HashSet;

use crate::knowledge::Target;
use crate::world::{BlockKind, Cell, Dir, Event, GroundStatus, Observation, Primitive, Tier};

use super::astar::NavGoal;
use super::nav::{leg, Leg};
use super::{fail, Ctx, Fail, FailureReason};

/// Side length of a chessboard node on the surface.
pub const NODE_SIZE: i32 = 20;
/// Tunnel length between branch points underground.
pub const BRANCH_INTERVAL: i32 = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Strategy {
    BfsGround,
    DfsUnderground,
}

impl Strategy {
    /// Recognised strategy text wins; anything else follows the ground status.
    pub fn choose(text: &str, status: GroundStatus) -> Strategy {
        let t = text.to_ascii_lowercase();
        if t.contains("dfs") || t.contains("underground") || t.contains("tunnel") {
            Strategy::DfsUnderground
        } else if t.contains("bfs") || t.contains("ground") || t.contains("surface") {
            Strategy::BfsGround
        } else if status == GroundStatus::Underground {
            Strategy::DfsUnderground
        } else {
            Strategy::BfsGround
        }
    }
}

pub(crate) fn visible(obs: &Observation, target: Target) -> bool {
    match target {
        Target::Block(k) => obs.lidar_hits.iter().any(|h| h.kind == Some(crate::world::HitKind::Block(k))),
        Target::Entity(k) => obs.lidar_hits.iter().any(|h| h.kind == Some(crate::world::HitKind::Entity(k))),
    }
}

pub(crate) fn explore(ctx: &mut Ctx, object: &str, strategy: &str) -> Result<String, Fail> {
    let Some(target) = ctx.target(object) else {
        return fail(FailureReason::NotVisible, format!("{object} is not a known object"));
    };
    if visible(&ctx.observe(), target) {
        return Ok(format!("{object} is already in sight"));
    }
    match Strategy::choose(strategy, ctx.sim.agent.ground_status) {
        Strategy::BfsGround => bfs_explore(ctx, target, object),
        Strategy::DfsUnderground => dfs_mine_explore(ctx, target, object),
    }
}

/// Chessboard node centres in breadth-first ring order around `start`'s node.
pub fn ring_order(start: Cell, dims: [i32; 3]) -> Vec<(i32, i32)> {
    let (nx, nz) = ((dims[0] + NODE_SIZE - 1) / NODE_SIZE, (dims[2] + NODE_SIZE - 1) / NODE_SIZE);
    let (sx, sz) = (start.x / NODE_SIZE, start.z / NODE_SIZE);
    let max_r = nx.max(nz);
    let mut out = Vec::new();
    for r in 1..=max_r {
        // clockwise around the perimeter
        let top = (-r..=r).map(|dx| (dx, -r));
        let right = (-r + 1..=r).map(|dz| (r, dz));
        let bottom = (-r..r).rev().map(|dx| (dx, r));
        let left = (-r + 1..r).rev().map(|dz| (-r, dz));
        let ring = top
            .chain(right)
            .chain(bottom)
            .chain(left)
            .map(|(dx, dz)| (sx + dx, sz + dz))
            .filter(|&(ix, iz)| ix >= 0 && iz >= 0 && ix < nx && iz < nz);
        for (ix, iz) in ring {
            let cx = (ix * NODE_SIZE + NODE_SIZE / 2).min(dims[0] - 1);
            let cz = (iz * NODE_SIZE + NODE_SIZE / 2).min(dims[2] - 1);
            out.push((cx, cz));
        }
    }
    out
}

pub(crate) fn bfs_explore(ctx: &mut Ctx, target: Target, object: &str) -> Result<String, Fail> {
    let order = ring_order(ctx.sim.agent.feet(), ctx.sim.world.dims());
    loop {
        let pass_start = ctx.used();
        for (i, &(x, z)) in order.iter().enumerate() {
            let goal = NavGoal::Column(x, z);
            let mut best = goal.heuristic(ctx.sim.agent.feet());
            let mut stalled = 0;
            loop {
                match leg(ctx, goal) {
                    Ok(Leg::Reached) => {
                        if visible(&ctx.observe(), target) {
                            return Ok(format!("found {object} after visiting {} nodes", i + 1));
                        }
                        break;
                    }
                    Ok(Leg::Moved) => {
                        if visible(&ctx.observe(), target) {
                            return Ok(format!("found {object} on the way to node {}", i + 1));
                        }
                        let h = goal.heuristic(ctx.sim.agent.feet());
                        if h < best {
                            best = h;
                            stalled = 0;
                        } else {
                            stalled += 1;
                            if stalled >= 3 {
                                break;
                            }
                        }
                    }
                    Err(f) if f.reason == FailureReason::NoPath => break,
                    Err(f) => return Err(f),
                }
            }
        }
        // whole map covered; keep cycling until the step cap ends the search
        if ctx.used() == pass_start {
            return fail(
                FailureReason::StepCapExceeded,
                format!("searched every reachable area without seeing {object}"),
            );
        }
    }
}

/// Tunnels 1 wide and 2 high at the current level, depth first.
pub(crate) fn dfs_mine_explore(ctx: &mut Ctx, target: Target, object: &str) -> Result<String, Fail> {
    let has_pick = ctx
        .sim
        .agent
        .inventory
        .keys()
        .any(|i| ctx.sim.world.rules.tier_of(Some(i)) >= Tier::Wood);
    if !has_pick {
        return fail(FailureReason::NotInInventory, "a pickaxe is needed to dig tunnels");
    }
    let y = ctx.sim.agent.feet().y;
    let mut visited: HashSet<(i32, i32)> = HashSet::new();
    let start = ctx.sim.agent.feet();
    visited.insert((start.x, start.z));
    let first = crate::world::Dir::from_yaw(ctx.sim.agent.yaw);
    // frames: branch point and the directions still to try there
    let mut stack: Vec<(Cell, Vec<Dir>)> = vec![(start, branch_dirs(first, true))];
    let mut carved = 0u32;
    while let Some((at, dirs)) = stack.last_mut() {
        let at = *at;
        let Some(dir) = dirs.pop() else {
            stack.pop();
            if let Some((parent, _)) = stack.last() {
                walk_back(ctx, *parent)?;
            }
            continue;
        };
        if ctx.sim.agent.feet() != at {
            walk_back(ctx, at)?;
        }
        let mut len = 0;
        while len < BRANCH_INTERVAL {
            let next = dir.step(ctx.sim.agent.feet());
            if next.y != y || visited.contains(&(next.x, next.z)) {
                break;
            }
            if !carve_step(ctx, dir, &mut carved)? {
                break;
            }
            visited.insert((next.x, next.z));
            len += 1;
            if visible(&ctx.observe(), target) {
                return Ok(format!("found {object} after digging {carved} blocks"));
            }
        }
        if len > 0 {
            let end = ctx.sim.agent.feet();
            stack.push((end, branch_dirs(dir, false)));
        }
    }
    fail(
        FailureReason::StepCapExceeded,
        format!("no {object} found at level {y} after digging {carved} blocks"),
    )
}

/// Directions to try at a branch, stored so that `pop` yields left first.
/// The starting point tries straight ahead before turning.
fn branch_dirs(heading: Dir, root: bool) -> Vec<Dir> {
    if root {
        vec![heading.left().left(), heading.right(), heading.left(), heading]
    } else {
        vec![heading, heading.right(), heading.left()]
    }
}

fn clear(ctx: &mut Ctx, cell: Cell, yaw: f64) -> Result<bool, Fail> {
    let block = ctx.sim.world.block(cell);
    if block == BlockKind::Air {
        return Ok(true);
    }
    if block.is_fluid() || !block.is_breakable() {
        return Ok(false);
    }
    let rules = &ctx.sim.world.rules;
    let need = rules.required_tier(block);
    if rules.tier_of(ctx.sim.agent.equipped.as_deref()) < need {
        let tool = ctx
            .sim
            .agent
            .inventory
            .keys()
            .filter(|i| rules.tier_of(Some(i)) >= need)
            .max_by_key(|i| rules.tier_of(Some(i)))
            .cloned();
        match tool {
            Some(t) => ctx.equip(&t)?,
            None => return Ok(false),
        }
    }
    let eye = ctx.sim.agent.eye();
    let (_, pitch) = crate::world::aim(eye, cell.center());
    ctx.face(yaw, pitch)?;
    let events = ctx.step(Primitive::AttackClick)?;
    Ok(events
        .iter()
        .any(|e| matches!(e, Event::BlockBroken { cell: c, .. } if *c == cell)))
}

/// Clears the two cells ahead and steps into them.
fn carve_step(ctx: &mut Ctx, dir: Dir, carved: &mut u32) -> Result<bool, Fail> {
    let feet = ctx.sim.agent.feet();
    let next = dir.step(feet);
    if !ctx.sim.world.block(next.down()).is_solid() {
        return Ok(false);
    }
    for cell in [next.up(), next] {
        let was_air = ctx.sim.world.block(cell) == BlockKind::Air;
        if !clear(ctx, cell, dir.yaw())? {
            return Ok(false);
        }
        if !was_air {
            *carved += 1;
        }
    }
    ctx.face(dir.yaw(), 0.0)?;
    ctx.step(Primitive::MoveForward)?;
    Ok(ctx.sim.agent.feet() == next)
}

/// Walks back along a straight carved tunnel to `to`.
fn walk_back(ctx: &mut Ctx, to: Cell) -> Result<(), Fail> {
    let mut guard = 0;
    while ctx.sim.agent.feet() != to {
        let f = ctx.sim.agent.feet();
        let dir = if to.x > f.x {
            Dir::East
        } else if to.x < f.x {
            Dir::West
        } else if to.z > f.z {
            Dir::South
        } else {
            Dir::North
        };
        ctx.face(dir.yaw(), 0.0)?;
        ctx.step(Primitive::MoveForward)?;
        guard += 1;
        if ctx.sim.agent.feet() == f || guard > 4 * BRANCH_INTERVAL {
            return fail(FailureReason::NoPath, "tunnel is blocked");
        }
    }
    Ok(())
}
