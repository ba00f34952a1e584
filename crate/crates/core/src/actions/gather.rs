//! mine, attack, apply and drop collection.

use crate::knowledge::Target;
use crate::world::{Cell, Event, Primitive, Tier, REACH};

use super::astar::NavGoal;
use super::nav::{locate, navigate, navigate_to};
use super::{fail, Ctx, Fail, FailureReason};

/// Walks over to dropped `item` stacks near `origin` until one is picked up.
fn collect(ctx: &mut Ctx, origin: Cell, item: &str, before: u32) -> Result<(), Fail> {
    for _ in 0..4 {
        if ctx.sim.agent.count(item) > before {
            return Ok(());
        }
        let drop = ctx
            .sim
            .world
            .item_drops
            .iter()
            .filter(|d| d.item == item)
            .min_by_key(|d| (d.pos.chebyshev(origin), d.pos))
            .map(|d| d.pos);
        let Some(pos) = drop else {
            break;
        };
        navigate_to(ctx, NavGoal::Near(pos))?;
        if ctx.sim.agent.count(item) <= before {
            // standing still for a tick lets the pickup happen
            ctx.idle()?;
        }
    }
    if ctx.sim.agent.count(item) > before {
        Ok(())
    } else {
        fail(FailureReason::NoPath, format!("could not collect the dropped {item}"))
    }
}

/// Picks the tool to use against a block needing `required`.
fn choose_tool(ctx: &Ctx, tool: Option<&str>, required: Tier, object: &str) -> Result<Option<String>, Fail> {
    let rules = &ctx.sim.world.rules;
    if let Some(t) = tool {
        let t = ctx.kb.canonical(t).unwrap_or(t).to_string();
        if ctx.sim.agent.count(&t) == 0 {
            return fail(FailureReason::NotInInventory, format!("{t} is not in the inventory"));
        }
        if rules.tier_of(Some(&t)) < required {
            return fail(
                FailureReason::InsufficientToolTier,
                format!("{t} is not good enough to mine {object}; it needs at least a {}", pick_name(required)),
            );
        }
        return Ok(Some(t));
    }
    if required == Tier::Hand {
        return Ok(None);
    }
    let best = ctx
        .sim
        .agent
        .inventory
        .keys()
        .filter(|i| rules.tier_of(Some(i)) >= required)
        .min_by_key(|i| (rules.tier_of(Some(i)), i.as_str()))
        .cloned();
    match best {
        Some(t) => Ok(Some(t)),
        None => fail(
            FailureReason::InsufficientToolTier,
            format!("mining {object} needs at least a {}", pick_name(required)),
        ),
    }
}

fn pick_name(t: Tier) -> &'static str {
    t.pickaxe().unwrap_or("bare hand")
}

pub(crate) fn mine(ctx: &mut Ctx, object: &str, tool: Option<&str>, count: Option<u32>) -> Result<String, Fail> {
    let Some(target) = ctx.target(object) else {
        return fail(FailureReason::NotVisible, format!("{object} is not a known object"));
    };
    let kind = match target {
        Target::Entity(_) => return attack(ctx, object, tool),
        Target::Block(k) => k,
    };
    let required = ctx.sim.world.rules.required_tier(kind);
    if let Some(t) = choose_tool(ctx, tool, required, object)? {
        ctx.equip(&t)?;
    }
    let Some(item) = kind.drop_item() else {
        return fail(FailureReason::ApiFailure, format!("{} drops nothing when mined", kind.name()));
    };
    let want = count.unwrap_or(1).max(1);
    let mut got = 0;
    while got < want {
        let obs = ctx.observe();
        let visible = obs.visible_blocks(kind);
        if visible.is_empty() {
            let msg = if got == 0 {
                format!("{object} is not visible")
            } else {
                format!("mined {got} {item} but no more {object} is visible")
            };
            return fail(FailureReason::NotVisible, msg);
        }
        let Some(&(cell, hit)) = visible.iter().find(|(_, h)| h.travel <= REACH) else {
            return fail(FailureReason::OutOfReach, format!("{object} is too far away to mine"));
        };
        let (yaw, pitch) = (hit.yaw as f64, hit.pitch as f64);
        ctx.face(yaw, pitch)?;
        let before = ctx.sim.agent.count(item);
        let events = ctx.step(Primitive::AttackClick)?;
        let broke = events
            .iter()
            .any(|e| matches!(e, Event::BlockBroken { cell: c, .. } if *c == cell));
        if !broke {
            if events.iter().any(|e| matches!(e, Event::InsufficientTier { .. })) {
                return fail(
                    FailureReason::InsufficientToolTier,
                    format!("the equipped tool cannot mine {object}"),
                );
            }
            return fail(FailureReason::ApiFailure, format!("failed to break the {object}"));
        }
        collect(ctx, cell, item, before)?;
        got += 1;
    }
    Ok(format!("obtained {got} {item}"))
}

pub(crate) fn attack(ctx: &mut Ctx, object: &str, tool: Option<&str>) -> Result<String, Fail> {
    let kind = match ctx.target(object) {
        Some(Target::Entity(k)) => k,
        Some(Target::Block(_)) => {
            return fail(FailureReason::ApiFailure, format!("{object} is not a creature; mine it instead"))
        }
        None => return fail(FailureReason::NotVisible, format!("{object} is not a known object")),
    };
    if let Some(t) = tool {
        let t = ctx.kb.canonical(t).unwrap_or(t).to_string();
        ctx.equip(&t)?;
    }
    let Some((_, Some(id))) = locate(ctx, Target::Entity(kind)) else {
        return fail(FailureReason::NotVisible, format!("{} is not visible", kind.name()));
    };
    loop {
        let Some(pos) = ctx.sim.world.entities.iter().find(|e| e.id == id).map(|e| e.pos) else {
            return fail(FailureReason::NotVisible, format!("the {} disappeared", kind.name()));
        };
        let obs = ctx.observe();
        let seen = obs.visible_entities(kind).into_iter().find(|(i, _)| *i == id);
        match seen {
            Some((_, hit)) if hit.travel <= REACH => {
                let before = ctx.sim.agent.inventory.clone();
                ctx.face(hit.yaw as f64, hit.pitch as f64)?;
                let events = ctx.step(Primitive::AttackClick)?;
                if events.iter().any(|e| matches!(e, Event::EntityKilled { id: i } if *i == id)) {
                    let mut loot = Vec::new();
                    for &(item, _) in kind.loot() {
                        let had = before.get(item).copied().unwrap_or(0);
                        let exists = ctx.sim.agent.count(item) > had
                            || ctx.sim.world.item_drops.iter().any(|d| d.item == item && d.pos == pos);
                        if exists {
                            collect(ctx, pos, item, had)?;
                            loot.push(item);
                        }
                    }
                    return Ok(format!("killed the {} and collected {}", kind.name(), loot.join(", ")));
                }
            }
            _ => {
                navigate(
                    ctx,
                    |c| c.sim.world.entities.iter().find(|e| e.id == id).map(|e| NavGoal::Near(e.pos)),
                    |_| false,
                )?;
                // Adjacent but no clear line of sight: give up rather than loop.
                let again = ctx.observe();
                if !again.visible_entities(kind).iter().any(|(i, h)| *i == id && h.travel <= REACH) {
                    return fail(FailureReason::OutOfReach, format!("cannot get a clear hit on the {}", kind.name()));
                }
            }
        }
    }
}

pub(crate) fn apply(ctx: &mut Ctx, object: &str, tool: &str) -> Result<String, Fail> {
    let tool = ctx.kb.canonical(tool).unwrap_or(tool).to_string();
    if ctx.sim.agent.count(&tool) == 0 {
        return fail(FailureReason::NotInInventory, format!("{tool} is not in the inventory"));
    }
    let Some(target) = ctx.target(object) else {
        return fail(FailureReason::NotVisible, format!("{object} is not a known object"));
    };
    ctx.equip(&tool)?;
    for _ in 0..2 {
        let obs = ctx.observe();
        let hit = match target {
            Target::Block(k) => obs.visible_blocks(k).first().map(|(c, h)| (*c, (*h).clone())),
            Target::Entity(k) => obs.visible_entities(k).first().map(|(_, h)| (h.cell.expect("entity cell"), (*h).clone())),
        };
        let Some((cell, hit)) = hit else {
            return fail(FailureReason::NotVisible, format!("{object} is not visible"));
        };
        if hit.travel > REACH {
            navigate_to(ctx, NavGoal::Near(cell))?;
            continue;
        }
        ctx.face(hit.yaw as f64, hit.pitch as f64)?;
        let events = ctx.step(Primitive::UseClick)?;
        for e in &events {
            match e {
                Event::Transformed { produced, .. } => return Ok(format!("{tool} became {produced}")),
                Event::PickedUp { item, count } => return Ok(format!("got {count} {item}")),
                _ => {}
            }
        }
        let why = events
            .iter()
            .find_map(|e| match e {
                Event::NoOp { reason } => Some(reason.clone()),
                _ => None,
            })
            .unwrap_or_else(|| "nothing happened".into());
        return fail(FailureReason::ApiFailure, why);
    }
    fail(FailureReason::OutOfReach, format!("{object} is too far away"))
}
