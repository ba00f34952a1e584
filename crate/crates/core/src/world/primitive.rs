use rand::Rng;
use serde::{Deserialize, Serialize};

use super::observe::{cast_ray_with, direction, entity_index, HitKind};
use super::{AgentState, BlockKind, Cell, Dir, World};

/// Interaction reach in blocks, measured as ray travel from the eye.
pub const REACH: f64 = 4.0;

const WANDER_CHANCE: f64 = 0.05;

/// Low-level control, one per tick.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "op")]
pub enum Primitive {
    MoveForward,
    StrafeLeft,
    StrafeRight,
    MoveBack,
    Jump,
    Turn { dyaw: f64, dpitch: f64 },
    AttackClick,
    UseClick,
    PlaceBlock { item: String },
    Select { item: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "event")]
pub enum Event {
    Moved { to: Cell },
    Jumped { to: Cell },
    Turned { yaw: f64, pitch: f64 },
    Fell { to: Cell },
    BlockBroken { cell: Cell, block: BlockKind, drop: Option<String> },
    InsufficientTier { cell: Cell, block: BlockKind },
    EntityHit { id: u32, damage: i32 },
    EntityKilled { id: u32 },
    BlockPlaced { cell: Cell, item: String },
    Selected { item: String },
    Transformed { consumed: String, produced: String },
    PickedUp { item: String, count: u32 },
    NoOp { reason: String },
}

fn noop(reason: impl Into<String>) -> Event {
    Event::NoOp {
        reason: reason.into(),
    }
}

impl World {
    fn supported(&self, feet: Cell) -> bool {
        self.block(feet.down()).is_solid()
    }

    /// Applies a primitive. Invalid targets produce `NoOp` events, never panics.
    pub fn apply_primitive(&mut self, agent: &mut AgentState, p: &Primitive) -> Vec<Event> {
        match p {
            Primitive::MoveForward => self.walk(agent, Dir::from_yaw(agent.yaw)),
            Primitive::MoveBack => self.walk(agent, Dir::from_yaw(agent.yaw).left().left()),
            Primitive::StrafeLeft => self.walk(agent, Dir::from_yaw(agent.yaw).left()),
            Primitive::StrafeRight => self.walk(agent, Dir::from_yaw(agent.yaw).right()),
            Primitive::Jump => {
                let feet = agent.feet();
                if agent.hover == 0 && self.supported(feet) && self.is_passable(feet.up().up()) {
                    agent.set_feet(feet.up());
                    agent.hover = 1;
                    vec![Event::Jumped { to: feet.up() }]
                } else {
                    vec![noop("cannot jump")]
                }
            }
            Primitive::Turn { dyaw, dpitch } => {
                agent.yaw = (agent.yaw + dyaw).rem_euclid(360.0);
                agent.pitch = (agent.pitch + dpitch).clamp(-90.0, 90.0);
                vec![Event::Turned {
                    yaw: agent.yaw,
                    pitch: agent.pitch,
                }]
            }
            Primitive::AttackClick => self.attack(agent),
            Primitive::UseClick => self.use_item(agent),
            Primitive::PlaceBlock { item } => self.place(agent, item),
            Primitive::Select { item } => {
                if agent.count(item) > 0 {
                    agent.equipped = Some(item.clone());
                    vec![Event::Selected { item: item.clone() }]
                } else {
                    vec![noop(format!("{item} is not in inventory"))]
                }
            }
        }
    }

    fn walk(&mut self, agent: &mut AgentState, dir: Dir) -> Vec<Event> {
        let target = dir.step(agent.feet());
        if self.is_passable(target) && self.is_passable(target.up()) {
            agent.set_feet(target);
            vec![Event::Moved { to: target }]
        } else {
            vec![noop("movement blocked")]
        }
    }

    fn attack(&mut self, agent: &mut AgentState) -> Vec<Event> {
        let entities = entity_index(self);
        let hit = cast_ray_with(
            self,
            &entities,
            agent.eye(),
            direction(agent.yaw, agent.pitch),
            REACH,
            &[agent.feet(), agent.head()],
            BlockKind::is_solid,
        );
        let Some(hit) = hit else {
            return vec![noop("nothing within reach")];
        };
        match hit.kind {
            HitKind::Entity(_) => {
                let id = hit.entity.expect("entity id");
                let damage = self.rules.damage_of(agent.equipped.as_deref());
                let idx = self.entities.iter().position(|e| e.id == id).expect("indexed");
                self.entities[idx].health -= damage;
                let mut events = vec![Event::EntityHit { id, damage }];
                if self.entities[idx].health <= 0 {
                    let dead = self.entities.remove(idx);
                    for &(item, n) in dead.kind.loot() {
                        if item == "wool" && dead.sheared {
                            continue;
                        }
                        self.spawn_drop(dead.pos, item, n);
                    }
                    events.push(Event::EntityKilled { id });
                }
                events
            }
            HitKind::Block(block) => {
                if !block.is_breakable() {
                    return vec![noop(format!("{} cannot be broken", block.name()))];
                }
                let tool = self.rules.tier_of(agent.equipped.as_deref());
                if tool < self.rules.required_tier(block) {
                    return vec![Event::InsufficientTier {
                        cell: hit.cell,
                        block,
                    }];
                }
                self.set_block(hit.cell, BlockKind::Air);
                let drop = block.drop_item().map(str::to_string);
                if let Some(item) = &drop {
                    self.spawn_drop(hit.cell, item, 1);
                }
                vec![Event::BlockBroken {
                    cell: hit.cell,
                    block,
                    drop,
                }]
            }
        }
    }

    fn use_item(&mut self, agent: &mut AgentState) -> Vec<Event> {
        let Some(tool) = agent.equipped.clone() else {
            return vec![noop("nothing equipped")];
        };
        let entities = entity_index(self);
        let hit = cast_ray_with(
            self,
            &entities,
            agent.eye(),
            direction(agent.yaw, agent.pitch),
            REACH,
            &[agent.feet(), agent.head()],
            BlockKind::is_opaque,
        );
        let Some(hit) = hit else {
            return vec![noop("nothing within reach")];
        };
        let transform = |agent: &mut AgentState, produced: &str| {
            agent.remove_item(&tool, 1);
            agent.add_item(produced, 1);
            vec![Event::Transformed {
                consumed: tool.clone(),
                produced: produced.to_string(),
            }]
        };
        match (tool.as_str(), hit.kind) {
            ("bucket", HitKind::Block(BlockKind::Water)) => {
                self.set_block(hit.cell, BlockKind::Air);
                transform(agent, "water_bucket")
            }
            ("bucket", HitKind::Block(BlockKind::Lava)) => {
                self.set_block(hit.cell, BlockKind::Air);
                transform(agent, "lava_bucket")
            }
            ("bucket", HitKind::Entity(super::EntityKind::Cow)) => transform(agent, "milk_bucket"),
            ("shears", HitKind::Entity(super::EntityKind::Sheep)) => {
                let id = hit.entity.expect("entity id");
                let sheep = self
                    .entities
                    .iter_mut()
                    .find(|e| e.id == id)
                    .expect("indexed");
                if sheep.sheared {
                    return vec![noop("sheep already sheared")];
                }
                sheep.sheared = true;
                agent.add_item("wool", 1);
                vec![Event::PickedUp {
                    item: "wool".into(),
                    count: 1,
                }]
            }
            _ => vec![noop(format!("{tool} has no effect on {}", hit.kind.name()))],
        }
    }

    /// Cell a block would be placed into with the current aim, if any.
    pub fn placement_cell(&self, agent: &AgentState) -> Option<Cell> {
        let entities = entity_index(self);
        let hit = cast_ray_with(
            self,
            &entities,
            agent.eye(),
            direction(agent.yaw, agent.pitch),
            REACH,
            &[agent.feet(), agent.head()],
            BlockKind::is_solid,
        )?;
        let cell = hit.prev;
        (cell != hit.cell
            && !agent.occupies(cell)
            && self.in_bounds(cell)
            && !self.block(cell).is_solid()
            && self.entity_at(cell).is_none())
        .then_some(cell)
    }

    fn place(&mut self, agent: &mut AgentState, item: &str) -> Vec<Event> {
        let Some(kind) = BlockKind::from_placeable_item(item) else {
            return vec![noop(format!("{item} cannot be placed"))];
        };
        if agent.count(item) == 0 {
            return vec![noop(format!("{item} is not in inventory"))];
        }
        let Some(cell) = self.placement_cell(agent) else {
            return vec![noop("no valid placement position")];
        };
        agent.remove_item(item, 1);
        self.set_block(cell, kind);
        vec![Event::BlockPlaced {
            cell,
            item: item.to_string(),
        }]
    }

    /// Advances time: gravity, mob wandering and drop pickup.
    pub fn tick(&mut self, agent: &mut AgentState) -> Vec<Event> {
        self.tick_count += 1;
        let mut events = Vec::new();

        if agent.hover > 0 {
            agent.hover -= 1;
        } else {
            let start = agent.feet();
            let mut feet = start;
            while feet.y > 0 && !self.supported(feet) {
                feet = feet.down();
            }
            if feet != start {
                agent.set_feet(feet);
                events.push(Event::Fell { to: feet });
            }
        }

        for i in 0..self.item_drops.len() {
            let mut pos = self.item_drops[i].pos;
            while pos.y > 0 && !self.block(pos.down()).is_solid() {
                pos = pos.down();
            }
            self.item_drops[i].pos = pos;
        }

        for i in 0..self.entities.len() {
            if self.rng.gen::<f64>() >= WANDER_CHANCE {
                continue;
            }
            let dir = Dir::ALL[self.rng.gen_range(0..4)];
            let from = self.entities[i].pos;
            let ahead = dir.step(from);
            let target = [ahead, ahead.up(), ahead.down()].into_iter().find(|&c| {
                self.is_passable(c) && self.block(c.down()).is_solid()
            });
            if let Some(t) = target {
                if !agent.occupies(t) && self.entity_at(t).is_none() {
                    self.entities[i].pos = t;
                }
            }
        }

        let body = [agent.feet(), agent.head()];
        let mut kept = Vec::with_capacity(self.item_drops.len());
        for drop in std::mem::take(&mut self.item_drops) {
            if body.iter().any(|b| b.chebyshev(drop.pos) <= 1) {
                agent.add_item(&drop.item, drop.count);
                events.push(Event::PickedUp {
                    item: drop.item,
                    count: drop.count,
                });
            } else {
                kept.push(drop);
            }
        }
        self.item_drops = kept;
        events
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::{generate_world, WorldConfig};

    fn flat() -> World {
        let cfg = WorldConfig {
            dims: [16, 20, 16],
            ore_bands: Default::default(),
            biome_layout: vec![],
            ..Default::default()
        };
        let mut w = generate_world(&cfg).unwrap();
        for z in 0..16 {
            for x in 0..16 {
                for y in 0..20 {
                    let k = match y {
                        0 => BlockKind::Bedrock,
                        1..=4 => BlockKind::Stone,
                        _ => BlockKind::Air,
                    };
                    w.set_block(Cell::new(x, y, z), k);
                }
            }
        }
        w.entities.clear();
        w.item_drops.clear();
        w
    }

    fn facing_block(w: &mut World, agent: &mut AgentState, block: BlockKind) -> Cell {
        let target = agent.feet().offset(1, 0, 0);
        w.set_block(target, block);
        agent.yaw = 0.0;
        agent.pitch = -30.0;
        target
    }

    #[test]
    fn stone_breaks_in_one_click_with_wooden_pickaxe() {
        let mut w = flat();
        let mut a = AgentState::at(Cell::new(5, 5, 5));
        a.add_item("wooden_pickaxe", 1);
        a.equipped = Some("wooden_pickaxe".into());
        let target = facing_block(&mut w, &mut a, BlockKind::Stone);
        let ev = w.apply_primitive(&mut a, &Primitive::AttackClick);
        assert!(matches!(&ev[0], Event::BlockBroken { drop: Some(d), .. } if d == "cobblestone"));
        assert_eq!(w.block(target), BlockKind::Air);
        w.tick(&mut a);
        assert_eq!(a.count("cobblestone"), 1);
    }

    #[test]
    fn iron_ore_needs_stone_tier() {
        let mut w = flat();
        let mut a = AgentState::at(Cell::new(5, 5, 5));
        a.add_item("wooden_pickaxe", 1);
        a.equipped = Some("wooden_pickaxe".into());
        let target = facing_block(&mut w, &mut a, BlockKind::IronOre);
        let ev = w.apply_primitive(&mut a, &Primitive::AttackClick);
        assert!(matches!(ev[0], Event::InsufficientTier { .. }));
        assert_eq!(w.block(target), BlockKind::IronOre);
    }

    #[test]
    fn place_without_item_is_noop() {
        let mut w = flat();
        let mut a = AgentState::at(Cell::new(5, 5, 5));
        a.pitch = -90.0;
        let ev = w.apply_primitive(&mut a, &Primitive::PlaceBlock { item: "dirt".into() });
        assert!(matches!(ev[0], Event::NoOp { .. }));
    }

    #[test]
    fn empty_world_tick_only_advances_counter() {
        let mut w = flat();
        let mut a = AgentState::at(Cell::new(5, 5, 5));
        let before_blocks = w.blocks().to_vec();
        let before_agent = a.clone();
        let ev = w.tick(&mut a);
        assert!(ev.is_empty());
        assert_eq!(w.tick_count, 1);
        assert_eq!(a, before_agent);
        assert_eq!(w.blocks(), &before_blocks[..]);
    }

    #[test]
    fn drop_at_agent_collected_next_tick() {
        let mut w = flat();
        let mut a = AgentState::at(Cell::new(5, 5, 5));
        w.spawn_drop(a.feet(), "log", 2);
        w.tick(&mut a);
        assert_eq!(a.count("log"), 2);
        assert!(w.item_drops.is_empty());
    }

    #[test]
    fn pillar_by_jump_and_place() {
        let mut w = flat();
        let mut a = AgentState::at(Cell::new(5, 5, 5));
        a.add_item("dirt", 1);
        a.pitch = -90.0;
        w.apply_primitive(&mut a, &Primitive::Jump);
        w.tick(&mut a);
        let ev = w.apply_primitive(&mut a, &Primitive::PlaceBlock { item: "dirt".into() });
        assert!(matches!(ev[0], Event::BlockPlaced { cell, .. } if cell == Cell::new(5, 5, 5)));
        w.tick(&mut a);
        assert_eq!(a.feet(), Cell::new(5, 6, 5));
        assert_eq!(a.count("dirt"), 0);
    }

    #[test]
    fn killing_sheep_drops_loot() {
        let mut w = flat();
        let mut a = AgentState::at(Cell::new(5, 5, 5));
        w.entities.push(crate::world::Entity {
            id: 9,
            kind: crate::world::EntityKind::Sheep,
            pos: Cell::new(6, 5, 5),
            health: 1,
            sheared: false,
        });
        a.pitch = -40.0;
        let ev = w.apply_primitive(&mut a, &Primitive::AttackClick);
        assert!(ev.iter().any(|e| matches!(e, Event::EntityKilled { id: 9 })));
        assert_eq!(w.item_drops.len(), 2);
    }
}
