//! Blueprints and the build action.

use std::collections::BTreeMap;
use std::path::Path as FsPath;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::world::{
    aim, cast_ray_with, direction, entity_index, voxel_patch, BlockKind, Cell, Event, Primitive, World, REACH,
};

use super::astar::{plan, NavGoal};
use super::nav::{exec_move, PILLAR_ITEMS};
use super::{fail, Ctx, Fail, FailureReason};

const SHELTER: &str = include_str!("../../data/blueprints/shelter.json");
const PORTAL: &str = include_str!("../../data/blueprints/nether_portal_frame.json");

/// Candidate standing spots examined per block.
const MAX_STANDS: usize = 40;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlueprintBlock {
    pub dx: i32,
    pub dy: i32,
    pub dz: i32,
    pub block: String,
}

/// Blocks placed relative to the agent's feet when the build starts, bottom-up.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Blueprint {
    pub name: String,
    pub blocks: Vec<BlueprintBlock>,
}

impl Blueprint {
    pub fn from_json(name: &str, text: &str) -> Result<Self> {
        let mut blocks: Vec<BlueprintBlock> =
            serde_json::from_str(text).map_err(|e| Error::json(format!("blueprint {name}"), e))?;
        for b in &blocks {
            if BlockKind::from_placeable_item(&b.block).is_none() {
                return Err(Error::Blueprint(format!("{name}: `{}` cannot be placed", b.block)));
            }
        }
        blocks.sort_by_key(|b| b.dy);
        Ok(Blueprint {
            name: name.to_string(),
            blocks,
        })
    }

    pub fn bundled(name: &str) -> Option<Blueprint> {
        let text = match name {
            "shelter" => SHELTER,
            "nether_portal_frame" | "nether_portal" => PORTAL,
            _ => return None,
        };
        Some(Blueprint::from_json(name, text).expect("bundled blueprint is valid"))
    }

    /// A bundled name, a path to a JSON file, or inline JSON.
    pub fn resolve(arg: &str) -> Result<Blueprint> {
        if let Some(b) = Blueprint::bundled(arg.trim()) {
            return Ok(b);
        }
        let trimmed = arg.trim_start();
        if trimmed.starts_with('[') {
            return Blueprint::from_json("inline", arg);
        }
        let path = FsPath::new(arg);
        if path.is_file() {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("blueprint");
            return Blueprint::from_json(name, &text);
        }
        Err(Error::Blueprint(format!("unknown blueprint `{arg}`")))
    }

    pub fn materials(&self) -> BTreeMap<String, u32> {
        let mut m = BTreeMap::new();
        for b in &self.blocks {
            *m.entry(b.block.clone()).or_insert(0) += 1;
        }
        m
    }
}

const FACES: [(i32, i32, i32); 6] = [(0, -1, 0), (1, 0, 0), (-1, 0, 0), (0, 0, 1), (0, 0, -1), (0, 1, 0)];

/// Yaw/pitch that makes a placement from `feet` land in `target`.
fn aim_for(world: &World, feet: Cell, target: Cell) -> Option<(f64, f64)> {
    let body = [feet, feet.up()];
    if body.contains(&target) {
        return None;
    }
    let eye = [feet.x as f64 + 0.5, feet.y as f64 + 1.5, feet.z as f64 + 0.5];
    let entities = entity_index(world);
    let tc = target.center();
    for (fx, fy, fz) in FACES {
        let n = target.offset(fx, fy, fz);
        if !world.block(n).is_solid() {
            continue;
        }
        let (fx, fy, fz) = (fx as f64, fy as f64, fz as f64);
        for (u, v) in [(0.0, 0.0), (0.3, 0.3), (-0.3, 0.3), (0.3, -0.3), (-0.3, -0.3)] {
            // point just inside the neighbour, spread across the shared face
            let mut p = [tc[0] + fx * 0.52, tc[1] + fy * 0.52, tc[2] + fz * 0.52];
            let axes: Vec<usize> = (0..3).filter(|&a| [fx, fy, fz][a] == 0.0).collect();
            p[axes[0]] += u;
            p[axes[1]] += v;
            let (yaw, pitch) = aim(eye, p);
            let hit = cast_ray_with(world, &entities, eye, direction(yaw, pitch), REACH, &body, BlockKind::is_solid);
            if let Some(h) = hit {
                if h.cell == n && h.prev == target && world.entity_at(target).is_none() {
                    return Some((yaw, pitch));
                }
            }
        }
    }
    None
}

fn place_at(ctx: &mut Ctx, target: Cell, item: &str, reserve: &BTreeMap<String, u32>) -> Result<(), Fail> {
    for _ in 0..3 {
        let feet = ctx.sim.agent.feet();
        if let Some((yaw, pitch)) = aim_for(&ctx.sim.world, feet, target) {
            ctx.face(yaw, pitch)?;
            let events = ctx.step(Primitive::PlaceBlock { item: item.into() })?;
            if events
                .iter()
                .any(|e| matches!(e, Event::BlockPlaced { cell, .. } if *cell == target))
            {
                return Ok(());
            }
            continue;
        }
        if !reposition(ctx, target, reserve)? {
            break;
        }
    }
    fail(
        FailureReason::InvalidPlacement,
        format!("cannot place {item} at {target}"),
    )
}

/// Moves to a spot from which `target` can be placed. Pillars only with
/// blocks the blueprint does not still need.
fn reposition(ctx: &mut Ctx, target: Cell, reserve: &BTreeMap<String, u32>) -> Result<bool, Fail> {
    let feet = ctx.sim.agent.feet();
    let budget: u32 = PILLAR_ITEMS
        .iter()
        .map(|i| ctx.sim.agent.count(i).saturating_sub(reserve.get(*i).copied().unwrap_or(0)))
        .sum();
    let patch = voxel_patch(&ctx.sim.world, &ctx.sim.agent);
    let world = &ctx.sim.world;
    let mut stands = Vec::new();
    for dy in -4..=4 {
        for dz in -4..=4 {
            for dx in -4..=4 {
                let s = target.offset(dx, dy, dz);
                if s == feet || !world.is_passable(s) || !world.is_passable(s.up()) {
                    continue;
                }
                stands.push(s);
            }
        }
    }
    stands.sort_by_key(|s| (s.chebyshev(feet), s.y, *s));
    let mut tried = 0;
    for s in stands {
        if aim_for(world, s, target).is_none() {
            continue;
        }
        tried += 1;
        if tried > MAX_STANDS {
            break;
        }
        if let Ok(path) = plan(&patch, feet, NavGoal::Exact(s), budget) {
            if !path.complete {
                continue;
            }
            for m in path.moves {
                if !exec_move(ctx, m)? {
                    return Ok(true);
                }
            }
            return Ok(true);
        }
    }
    Ok(false)
}

pub(crate) fn build(ctx: &mut Ctx, arg: &str) -> Result<String, Fail> {
    let bp = match Blueprint::resolve(arg) {
        Ok(b) => b,
        Err(e) => return fail(FailureReason::ApiFailure, e.to_string()),
    };
    let anchor = ctx.sim.agent.feet();
    let mut remaining = bp.materials();
    let total = bp.blocks.len();
    for (i, b) in bp.blocks.iter().enumerate() {
        let target = anchor.offset(b.dx, b.dy, b.dz);
        let kind = BlockKind::from_placeable_item(&b.block).expect("validated");
        if let Some(n) = remaining.get_mut(&b.block) {
            *n -= 1;
        }
        let current = ctx.sim.world.block(target);
        if current == kind {
            continue;
        }
        if current.is_solid() {
            return fail(
                FailureReason::InvalidPlacement,
                format!("placed {i} of {total} blocks; {target} is already taken by {}", current.name()),
            );
        }
        if ctx.sim.agent.count(&b.block) == 0 {
            return fail(
                FailureReason::InsufficientMaterials,
                format!("placed {i} of {total} blocks; ran out of {}", b.block),
            );
        }
        place_at(ctx, target, &b.block, &remaining)?;
    }
    ctx.face(ctx.sim.agent.yaw, 0.0)?;
    Ok(format!("built {} from {total} blocks", bp.name))
}
