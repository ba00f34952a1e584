//! Executing A* paths against the simulator and the approach action.

use crate::knowledge::Target;
use crate::world::{voxel_patch, AgentState, Cell, Primitive};

use super::astar::{plan, Move, NavGoal};
use super::{fail, Ctx, Fail, FailureReason};

/// Legs without progress before navigation gives up.
const STALL_LEGS: u32 = 4;
const MAX_LEGS: u32 = 400;
/// Visible blocks tried in turn by approach.
const APPROACH_CANDIDATES: usize = 6;

/// Blocks the agent may stand on top of while pillaring, in preference order.
pub(crate) const PILLAR_ITEMS: [&str; 2] = ["dirt", "cobblestone"];

pub(crate) fn pillar_budget(agent: &AgentState) -> u32 {
    PILLAR_ITEMS.iter().map(|i| agent.count(i)).sum()
}

pub(crate) fn pillar_item(agent: &AgentState) -> Option<&'static str> {
    PILLAR_ITEMS.into_iter().find(|i| agent.count(i) > 0)
}

/// Look straight down, jump and place a block underfoot.
pub(crate) fn pillar_once(ctx: &mut Ctx) -> Result<bool, Fail> {
    let Some(item) = pillar_item(&ctx.sim.agent) else {
        return Ok(false);
    };
    let start = ctx.sim.agent.feet();
    ctx.face(ctx.sim.agent.yaw, -90.0)?;
    ctx.step(Primitive::Jump)?;
    ctx.step(Primitive::PlaceBlock { item: item.into() })?;
    Ok(ctx.sim.agent.feet() == start.up())
}

/// Performs one move; returns whether the agent ended where planned.
pub(crate) fn exec_move(ctx: &mut Ctx, m: Move) -> Result<bool, Fail> {
    match m {
        Move::Walk { dir, .. } | Move::Fall { dir, .. } => {
            ctx.face(dir.yaw(), 0.0)?;
            ctx.step(Primitive::MoveForward)?;
        }
        Move::Jump { dir, .. } => {
            ctx.face(dir.yaw(), 0.0)?;
            ctx.step(Primitive::Jump)?;
            ctx.step(Primitive::MoveForward)?;
        }
        Move::Pillar { .. } => {
            if !pillar_once(ctx)? {
                return Ok(false);
            }
        }
    }
    Ok(ctx.sim.agent.feet() == m.to())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Leg {
    Reached,
    Moved,
}

/// Plans inside the current voxel patch and walks the result.
pub(crate) fn leg(ctx: &mut Ctx, goal: NavGoal) -> Result<Leg, Fail> {
    let feet = ctx.sim.agent.feet();
    if goal.reached(feet) {
        return Ok(Leg::Reached);
    }
    let patch = voxel_patch(&ctx.sim.world, &ctx.sim.agent);
    let budget = pillar_budget(&ctx.sim.agent);
    let path = match plan(&patch, feet, goal, budget) {
        Ok(p) => p,
        Err(_) => return fail(FailureReason::NoPath, "no path to the target"),
    };
    for m in path.moves {
        if !exec_move(ctx, m)? {
            break;
        }
    }
    if goal.reached(ctx.sim.agent.feet()) {
        Ok(Leg::Reached)
    } else {
        Ok(Leg::Moved)
    }
}

/// Repeated legs until the goal is reached. `goal_fn` is re-evaluated before
/// each leg so moving targets can be tracked; `stop` may end early.
pub(crate) fn navigate(
    ctx: &mut Ctx,
    mut goal_fn: impl FnMut(&Ctx) -> Option<NavGoal>,
    mut stop: impl FnMut(&mut Ctx) -> bool,
) -> Result<bool, Fail> {
    let mut best = u32::MAX;
    let mut stalled = 0;
    for _ in 0..MAX_LEGS {
        if stop(ctx) {
            return Ok(false);
        }
        let Some(goal) = goal_fn(ctx) else {
            return fail(FailureReason::NotVisible, "lost track of the target");
        };
        let feet = ctx.sim.agent.feet();
        if goal.reached(feet) {
            return Ok(true);
        }
        let h = goal.heuristic(feet);
        if h < best {
            best = h;
            stalled = 0;
        } else {
            stalled += 1;
            if stalled >= STALL_LEGS {
                return fail(FailureReason::NoPath, "cannot find a way to the target");
            }
        }
        if leg(ctx, goal)? == Leg::Reached {
            return Ok(true);
        }
    }
    fail(FailureReason::NoPath, "cannot find a way to the target")
}

pub(crate) fn navigate_to(ctx: &mut Ctx, goal: NavGoal) -> Result<(), Fail> {
    navigate(ctx, |_| Some(goal), |_| false).map(|_| ())
}

/// Current cell of a target instance: nearest visible block, or a tracked entity.
pub(crate) fn locate(ctx: &Ctx, target: Target) -> Option<(Cell, Option<u32>)> {
    let obs = ctx.observe();
    match target {
        Target::Block(kind) => obs.visible_blocks(kind).first().map(|(c, _)| (*c, None)),
        Target::Entity(kind) => obs
            .visible_entities(kind)
            .first()
            .and_then(|(id, h)| h.cell.map(|c| (c, Some(*id)))),
    }
}

pub(crate) fn approach(ctx: &mut Ctx, object: &str) -> Result<String, Fail> {
    let Some(target) = ctx.target(object) else {
        return fail(FailureReason::NotVisible, format!("{object} is not a known object"));
    };
    if let Target::Block(kind) = target {
        let cells: Vec<Cell> = ctx.observe().visible_blocks(kind).iter().take(APPROACH_CANDIDATES).map(|(c, _)| *c).collect();
        if cells.is_empty() {
            return fail(FailureReason::NotVisible, format!("{object} is not visible"));
        }
        let mut last = None;
        for cell in cells {
            match navigate_to(ctx, NavGoal::Near(cell)) {
                Ok(()) => return Ok(format!("arrived next to the {object}")),
                Err(e) if e.reason == FailureReason::NoPath => last = Some(e),
                Err(e) => return Err(e),
            }
        }
        return Err(last.expect("at least one candidate"));
    }
    let Some((cell, id)) = locate(ctx, target) else {
        return fail(FailureReason::NotVisible, format!("{object} is not visible"));
    };
    match id {
        None => navigate_to(ctx, NavGoal::Near(cell))?,
        Some(id) => {
            navigate(
                ctx,
                |c| {
                    c.sim
                        .world
                        .entities
                        .iter()
                        .find(|e| e.id == id)
                        .map(|e| NavGoal::Near(e.pos))
                },
                |_| false,
            )?;
        }
    }
    Ok(format!("arrived next to the {object}"))
}
