use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{AgentState, BlockKind, Entity, ItemDrop, Rules, World, WorldConfig};
use crate::error::{Error, Result};

pub const SNAPSHOT_VERSION: u32 = 1;

/// Versioned JSON dump of a world plus its agent. Blocks are run-length encoded
/// in storage order; field order is fixed by the struct layout.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub version: u32,
    pub config: WorldConfig,
    pub rules: Rules,
    pub tick_count: u64,
    pub rng_word_pos: u128,
    pub blocks: Vec<(BlockKind, u32)>,
    pub surface: Vec<i32>,
    pub entities: Vec<Entity>,
    pub item_drops: Vec<ItemDrop>,
    pub agent: AgentState,
}

impl Snapshot {
    pub fn capture(world: &World, agent: &AgentState) -> Self {
        let mut blocks: Vec<(BlockKind, u32)> = Vec::new();
        for &b in &world.blocks {
            match blocks.last_mut() {
                Some((k, n)) if *k == b => *n += 1,
                _ => blocks.push((b, 1)),
            }
        }
        Snapshot {
            version: SNAPSHOT_VERSION,
            config: world.config.clone(),
            rules: world.rules.clone(),
            tick_count: world.tick_count,
            rng_word_pos: world.rng.get_word_pos(),
            blocks,
            surface: world.surface.clone(),
            entities: world.entities.clone(),
            item_drops: world.item_drops.clone(),
            agent: agent.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("snapshot serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let snap: Snapshot = serde_json::from_str(text).map_err(|e| Error::json("snapshot", e))?;
        if snap.version != SNAPSHOT_VERSION {
            return Err(Error::Config {
                field: "version".into(),
                reason: format!("unsupported snapshot version {}", snap.version),
            });
        }
        Ok(snap)
    }

    pub fn restore(&self) -> Result<(World, AgentState)> {
        self.config.validate()?;
        let mut blocks = Vec::new();
        for &(k, n) in &self.blocks {
            blocks.extend(std::iter::repeat_n(k, n as usize));
        }
        let [dx, dy, dz] = self.config.dims;
        if blocks.len() != (dx * dy * dz) as usize {
            return Err(Error::Config {
                field: "blocks".into(),
                reason: "block count does not match dims".into(),
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed);
        rng.set_word_pos(self.rng_word_pos);
        let world = World {
            config: self.config.clone(),
            rules: self.rules.clone(),
            blocks,
            surface: self.surface.clone(),
            entities: self.entities.clone(),
            item_drops: self.item_drops.clone(),
            tick_count: self.tick_count,
            rng,
        };
        Ok((world, self.agent.clone()))
    }
}
