//! dig_down and go_up.

use crate::world::{aim, BlockKind, Cell, Dir, Event, GroundStatus, Primitive, Tier};

use super::astar::NavGoal;
use super::nav::{navigate_to, pillar_budget, pillar_once, PILLAR_ITEMS};
use super::{fail, Ctx, Fail, FailureReason};

/// Equips something able to break `block`, if anything is needed.
fn ready_tool(ctx: &mut Ctx, block: BlockKind) -> Result<(), Fail> {
    let rules = &ctx.sim.world.rules;
    let required = rules.required_tier(block);
    if required == Tier::Hand {
        return Ok(());
    }
    if rules.tier_of(ctx.sim.agent.equipped.as_deref()) >= required {
        return Ok(());
    }
    let tool = ctx
        .sim
        .agent
        .inventory
        .keys()
        .filter(|i| rules.tier_of(Some(i)) >= required)
        .min_by_key(|i| (rules.tier_of(Some(i)), i.as_str()))
        .cloned();
    match tool {
        Some(t) => ctx.equip(&t),
        None => fail(
            FailureReason::InsufficientToolTier,
            format!(
                "digging through {} needs at least a {}",
                block.name(),
                required.pickaxe().unwrap_or("bare hand")
            ),
        ),
    }
}

/// Breaks the block at `cell` by aiming at its centre.
fn break_aimed(ctx: &mut Ctx, cell: Cell) -> Result<(), Fail> {
    let block = ctx.sim.world.block(cell);
    if !block.is_breakable() {
        return fail(FailureReason::ApiFailure, format!("cannot dig through {}", block.name()));
    }
    ready_tool(ctx, block)?;
    // aim at the near face so the ray does not graze an edge
    let eye = ctx.sim.agent.eye();
    let mut target = cell.center();
    for i in [0, 2] {
        let d = target[i] - eye[i];
        if d.abs() > 0.5 {
            target[i] -= 0.4 * d.signum();
        }
    }
    let (yaw, pitch) = aim(eye, target);
    ctx.face(yaw, pitch)?;
    let events = ctx.step(Primitive::AttackClick)?;
    if events
        .iter()
        .any(|e| matches!(e, Event::BlockBroken { cell: c, .. } if *c == cell))
    {
        Ok(())
    } else {
        fail(FailureReason::ApiFailure, format!("failed to break the {}", block.name()))
    }
}

/// Cuts one stair step upward into a neighbouring column and climbs it.
fn stair_once(ctx: &mut Ctx) -> Result<bool, Fail> {
    let f = ctx.sim.agent.feet();
    let world = &ctx.sim.world;
    let usable = |c: Cell| {
        let b = world.block(c);
        !b.is_fluid() && (!b.is_solid() || b.is_breakable())
    };
    let Some(dir) = Dir::ALL.into_iter().find(|d| {
        let base = d.step(f);
        world.block(base).is_solid() && usable(base.up()) && usable(base.up().up()) && usable(f.up().up())
    }) else {
        return Ok(false);
    };
    let base = dir.step(f);
    if ctx.sim.world.block(f.up().up()).is_solid() {
        break_vertical(ctx, f.up().up(), 90.0)?;
    }
    for c in [base.up().up(), base.up()] {
        if ctx.sim.world.block(c).is_solid() {
            break_aimed(ctx, c)?;
        }
    }
    ctx.face(dir.yaw(), 0.0)?;
    ctx.step(Primitive::Jump)?;
    ctx.step(Primitive::MoveForward)?;
    Ok(ctx.sim.agent.feet() == base.up())
}

/// Breaks the block at `cell` by looking straight up or down at it.
fn break_vertical(ctx: &mut Ctx, cell: Cell, pitch: f64) -> Result<(), Fail> {
    let block = ctx.sim.world.block(cell);
    if !block.is_breakable() {
        return fail(FailureReason::ApiFailure, format!("cannot dig through {}", block.name()));
    }
    ready_tool(ctx, block)?;
    ctx.face(ctx.sim.agent.yaw, pitch)?;
    let events = ctx.step(Primitive::AttackClick)?;
    if events
        .iter()
        .any(|e| matches!(e, Event::BlockBroken { cell: c, .. } if *c == cell))
    {
        Ok(())
    } else {
        fail(FailureReason::ApiFailure, format!("failed to break the {}", block.name()))
    }
}

pub(crate) fn dig_down(ctx: &mut Ctx, ylevel: i32) -> Result<String, Fail> {
    let start = ctx.sim.agent.feet();
    if start.y <= ylevel {
        return Ok(format!("already at level {}", start.y));
    }
    if ctx.sim.agent.ground_status == GroundStatus::OnGround {
        ctx.sim.agent.dig_anchor = Some(start);
    }
    while ctx.sim.agent.feet().y > ylevel {
        let below = ctx.sim.agent.feet().down();
        let block = ctx.sim.world.block(below);
        if block.is_fluid() {
            ctx.sim.agent.ground_status = GroundStatus::Underground;
            return fail(
                FailureReason::ApiFailure,
                format!("stopped at level {}: {} below", ctx.sim.agent.feet().y, block.name()),
            );
        }
        if let Err(e) = break_vertical(ctx, below, -90.0) {
            ctx.sim.agent.ground_status = GroundStatus::Underground;
            return Err(e);
        }
        // the tick after the break lets the agent fall into the hole
        if ctx.sim.agent.feet().y > below.y {
            ctx.idle()?;
        }
    }
    ctx.sim.agent.ground_status = GroundStatus::Underground;
    Ok(format!("dug down to level {}", ctx.sim.agent.feet().y))
}

pub(crate) fn go_up(ctx: &mut Ctx) -> Result<String, Fail> {
    if ctx.sim.agent.ground_status == GroundStatus::OnGround {
        return Ok("already on the ground".into());
    }
    let anchor = ctx.sim.agent.dig_anchor;
    if let Some(a) = anchor {
        let f = ctx.sim.agent.feet();
        if (f.x, f.z) != (a.x, a.z) {
            // best effort: fall back to digging up in place
            let _ = navigate_to(ctx, NavGoal::Column(a.x, a.z));
        }
    }
    let f = ctx.sim.agent.feet();
    let target_y = match anchor {
        Some(a) if (a.x, a.z) == (f.x, f.z) => a.y,
        _ => ctx.sim.world.surface_height(f.x, f.z) + 1,
    };
    while ctx.sim.agent.feet().y < target_y {
        let head = ctx.sim.agent.head();
        let above = head.up();
        if ctx.sim.world.block(above).is_solid() {
            break_vertical(ctx, above, 90.0)?;
            continue;
        }
        if ctx.sim.agent.count(PILLAR_ITEMS[0]) == 0 && stair_once(ctx)? {
            continue;
        }
        if pillar_budget(&ctx.sim.agent) == 0 {
            return fail(
                FailureReason::InsufficientMaterials,
                format!(
                    "need {} more dirt to climb up",
                    target_y - ctx.sim.agent.feet().y
                ),
            );
        }
        if !pillar_once(ctx)? {
            return fail(FailureReason::ApiFailure, "could not place a block underneath");
        }
    }
    ctx.sim.agent.ground_status = GroundStatus::OnGround;
    ctx.sim.agent.dig_anchor = None;
    ctx.face(ctx.sim.agent.yaw, 0.0)?;
    Ok(format!("back on the ground at level {}", ctx.sim.agent.feet().y))
}
