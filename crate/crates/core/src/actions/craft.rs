//! Inventory-only crafting and smelting.

use std::collections::BTreeMap;

use crate::knowledge::Station;

use super::{fail, Ctx, Fail, FailureReason};

/// Applies the knowledge-base recipe for `object`. The planner's `materials`
/// argument only decides how many batches are wanted when `count` is absent.
pub(crate) fn transform(
    ctx: &mut Ctx,
    station: Station,
    object: &str,
    materials: &BTreeMap<String, u32>,
    tool: Option<&str>,
    count: Option<u32>,
) -> Result<String, Fail> {
    let verb = match station {
        Station::Craft => "craft",
        Station::Smelt => "smelt",
    };
    let Some(recipe) = ctx.kb.recipe(object).cloned() else {
        return fail(FailureReason::ApiFailure, format!("there is no recipe to {verb} {object}"));
    };
    if recipe.station != station {
        let other = if station == Station::Craft { "smelt" } else { "craft" };
        return fail(
            FailureReason::ApiFailure,
            format!("{} must be made with {other}, not {verb}", recipe.output),
        );
    }
    if let Some(needed) = &recipe.tool {
        if ctx.sim.agent.count(needed) == 0 {
            return fail(FailureReason::NotInInventory, format!("{needed} is not in the inventory"));
        }
    }
    let _ = tool;

    let batches = match count {
        Some(c) => c.div_ceil(recipe.output_count).max(1),
        None => recipe
            .materials
            .iter()
            .filter_map(|(m, &per)| materials.get(m).map(|&n| n / per))
            .max()
            .unwrap_or(1)
            .max(1),
    };

    let agent = &mut ctx.sim.agent;
    let possible = recipe
        .materials
        .iter()
        .map(|(m, &per)| agent.count(m) / per)
        .min()
        .unwrap_or(0);
    let made = possible.min(batches);
    if made == 0 {
        let missing: Vec<String> = recipe
            .materials
            .iter()
            .filter(|(m, &per)| agent.count(m) < per)
            .map(|(m, &per)| format!("{} more {m}", per - agent.count(m)))
            .collect();
        return fail(
            FailureReason::InsufficientMaterials,
            format!("not enough materials to {verb} {}: need {}", recipe.output, missing.join(" and ")),
        );
    }
    for _ in 0..made {
        let agent = &mut ctx.sim.agent;
        for (m, &per) in &recipe.materials {
            agent.remove_item(m, per);
        }
        agent.add_item(&recipe.output, recipe.output_count);
        ctx.idle()?;
    }
    let produced = made * recipe.output_count;
    if made < batches {
        return fail(
            FailureReason::InsufficientMaterials,
            format!(
                "only had materials to {verb} {produced} {}, wanted {}",
                recipe.output,
                batches * recipe.output_count
            ),
        );
    }
    Ok(format!("{verb}ed {produced} {}", recipe.output))
}
