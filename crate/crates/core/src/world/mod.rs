//! Seeded voxel world, the agent avatar, primitive controls and sensing.

mod gen;
mod observe;
mod primitive;
mod snapshot;

use std::collections::BTreeMap;
use std::fmt;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use gen::generate_world;
pub use observe::{
    aim, cast_ray, cast_ray_with, direction, entity_index, observe, voxel_patch, HitKind, LidarHit,
    Observation, RayHit, VoxelPatch, LIDAR_RANGE, PATCH_RADIUS,
};
pub use primitive::{Event, Primitive, REACH};
pub use snapshot::Snapshot;

/// Integer block coordinate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cell {
    pub x: i32,
    pub y: i32,
    pub z: i32,
}

impl Cell {
    pub const fn new(x: i32, y: i32, z: i32) -> Self {
        Cell { x, y, z }
    }

    pub fn offset(self, dx: i32, dy: i32, dz: i32) -> Self {
        Cell::new(self.x + dx, self.y + dy, self.z + dz)
    }

    pub fn up(self) -> Self {
        self.offset(0, 1, 0)
    }

    pub fn down(self) -> Self {
        self.offset(0, -1, 0)
    }

    /// ℓ∞ distance.
    pub fn chebyshev(self, other: Cell) -> i32 {
        (self.x - other.x)
            .abs()
            .max((self.y - other.y).abs())
            .max((self.z - other.z).abs())
    }

    pub fn chebyshev_xz(self, other: Cell) -> i32 {
        (self.x - other.x).abs().max((self.z - other.z).abs())
    }

    pub fn center(self) -> [f64; 3] {
        [
            self.x as f64 + 0.5,
            self.y as f64 + 0.5,
            self.z as f64 + 0.5,
        ]
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.x, self.y, self.z)
    }
}

/// Horizontal cardinal direction. Yaw 0 faces +x, yaw 90 faces +z.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Dir {
    North,
    East,
    South,
    West,
}

impl Dir {
    pub const ALL: [Dir; 4] = [Dir::North, Dir::East, Dir::South, Dir::West];

    pub fn delta(self) -> (i32, i32) {
        match self {
            Dir::North => (0, -1),
            Dir::East => (1, 0),
            Dir::South => (0, 1),
            Dir::West => (-1, 0),
        }
    }

    pub fn yaw(self) -> f64 {
        match self {
            Dir::East => 0.0,
            Dir::South => 90.0,
            Dir::West => 180.0,
            Dir::North => 270.0,
        }
    }

    pub fn from_yaw(yaw: f64) -> Dir {
        let idx = ((yaw.rem_euclid(360.0) + 45.0) / 90.0).floor() as i32 % 4;
        match idx {
            0 => Dir::East,
            1 => Dir::South,
            2 => Dir::West,
            _ => Dir::North,
        }
    }

    pub fn left(self) -> Dir {
        match self {
            Dir::North => Dir::West,
            Dir::West => Dir::South,
            Dir::South => Dir::East,
            Dir::East => Dir::North,
        }
    }

    pub fn right(self) -> Dir {
        self.left().left().left()
    }

    pub fn step(self, c: Cell) -> Cell {
        let (dx, dz) = self.delta();
        c.offset(dx, 0, dz)
    }
}

macro_rules! block_kinds {
    ($($variant:ident => $name:literal),+ $(,)?) => {
        #[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        #[serde(rename_all = "snake_case")]
        #[repr(u8)]
        pub enum BlockKind {
            $($variant),+
        }

        impl BlockKind {
            pub const ALL: &'static [BlockKind] = &[$(BlockKind::$variant),+];

            pub fn name(self) -> &'static str {
                match self {
                    $(BlockKind::$variant => $name),+
                }
            }

            pub fn from_name(name: &str) -> Option<BlockKind> {
                match name {
                    $($name => Some(BlockKind::$variant),)+
                    _ => None,
                }
            }
        }
    };
}

block_kinds! {
    Air => "air",
    Bedrock => "bedrock",
    Stone => "stone",
    Dirt => "dirt",
    Grass => "grass",
    Sand => "sand",
    Log => "log",
    Leaves => "leaves",
    CoalOre => "coal_ore",
    IronOre => "iron_ore",
    GoldOre => "gold_ore",
    DiamondOre => "diamond_ore",
    RedstoneOre => "redstone_ore",
    Obsidian => "obsidian",
    Water => "water",
    Lava => "lava",
    Planks => "planks",
    Cobblestone => "cobblestone",
    CraftingTable => "crafting_table",
    Furnace => "furnace",
    Glass => "glass",
    Chest => "chest",
}

impl BlockKind {
    pub fn is_fluid(self) -> bool {
        matches!(self, BlockKind::Water | BlockKind::Lava)
    }

    /// Supports an agent standing on top and blocks movement.
    pub fn is_solid(self) -> bool {
        !matches!(self, BlockKind::Air) && !self.is_fluid()
    }

    /// Stops LiDAR rays.
    pub fn is_opaque(self) -> bool {
        self != BlockKind::Air
    }

    pub fn is_breakable(self) -> bool {
        self.is_solid() && self != BlockKind::Bedrock
    }

    /// Item dropped when the block is broken.
    pub fn drop_item(self) -> Option<&'static str> {
        match self {
            BlockKind::Air
            | BlockKind::Bedrock
            | BlockKind::Leaves
            | BlockKind::Water
            | BlockKind::Lava
            | BlockKind::Glass => None,
            BlockKind::Stone => Some("cobblestone"),
            BlockKind::Grass => Some("dirt"),
            BlockKind::CoalOre => Some("coal"),
            BlockKind::DiamondOre => Some("diamond"),
            BlockKind::RedstoneOre => Some("redstone"),
            other => Some(other.name()),
        }
    }

    /// Block placed when the item is used as a block.
    pub fn from_placeable_item(item: &str) -> Option<BlockKind> {
        match item {
            "dirt" | "cobblestone" | "planks" | "log" | "sand" | "glass" | "obsidian"
            | "crafting_table" | "furnace" | "chest" | "stone" => BlockKind::from_name(item),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntityKind {
    Sheep,
    Cow,
    Pig,
    Chicken,
}

impl EntityKind {
    pub const ALL: [EntityKind; 4] = [
        EntityKind::Sheep,
        EntityKind::Cow,
        EntityKind::Pig,
        EntityKind::Chicken,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EntityKind::Sheep => "sheep",
            EntityKind::Cow => "cow",
            EntityKind::Pig => "pig",
            EntityKind::Chicken => "chicken",
        }
    }

    pub fn from_name(name: &str) -> Option<EntityKind> {
        EntityKind::ALL.into_iter().find(|k| k.name() == name)
    }

    pub fn max_health(self) -> i32 {
        match self {
            EntityKind::Sheep => 8,
            EntityKind::Cow | EntityKind::Pig => 10,
            EntityKind::Chicken => 4,
        }
    }

    pub fn loot(self) -> &'static [(&'static str, u32)] {
        match self {
            EntityKind::Sheep => &[("wool", 1), ("mutton", 1)],
            EntityKind::Cow => &[("beef", 1), ("leather", 1)],
            EntityKind::Pig => &[("porkchop", 1)],
            EntityKind::Chicken => &[("chicken", 1), ("feather", 1)],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Entity {
    pub id: u32,
    pub kind: EntityKind,
    pub pos: Cell,
    pub health: i32,
    #[serde(default)]
    pub sheared: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ItemDrop {
    pub pos: Cell,
    pub item: String,
    pub count: u32,
}

/// Mining capability: hand < wood < stone < iron < diamond.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tier {
    Hand,
    Wood,
    Stone,
    Iron,
    Diamond,
}

impl Tier {
    pub fn pickaxe(self) -> Option<&'static str> {
        match self {
            Tier::Hand => None,
            Tier::Wood => Some("wooden_pickaxe"),
            Tier::Stone => Some("stone_pickaxe"),
            Tier::Iron => Some("iron_pickaxe"),
            Tier::Diamond => Some("diamond_pickaxe"),
        }
    }
}

/// Tool and block tables the simulator consults. Built from the knowledge base.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rules {
    pub block_tiers: BTreeMap<BlockKind, Tier>,
    pub tool_tiers: BTreeMap<String, Tier>,
    pub tool_damage: BTreeMap<String, i32>,
}

impl Rules {
    pub fn required_tier(&self, block: BlockKind) -> Tier {
        self.block_tiers.get(&block).copied().unwrap_or(Tier::Hand)
    }

    pub fn tier_of(&self, item: Option<&str>) -> Tier {
        item.and_then(|i| self.tool_tiers.get(i).copied())
            .unwrap_or(Tier::Hand)
    }

    pub fn damage_of(&self, item: Option<&str>) -> i32 {
        item.and_then(|i| self.tool_damage.get(i).copied())
            .unwrap_or(1)
    }
}

impl Default for Rules {
    fn default() -> Self {
        crate::knowledge::KnowledgeBase::bundled().rules()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OreBand {
    pub y_min: i32,
    pub y_max: i32,
    /// Probability that each vein attempt in a 16×16 chunk succeeds.
    pub density: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BiomeRegion {
    pub name: String,
    pub x_min: i32,
    pub z_min: i32,
    pub x_max: i32,
    pub z_max: i32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorldConfig {
    pub seed: u64,
    pub dims: [i32; 3],
    /// Keyed by ore block name.
    pub ore_bands: BTreeMap<String, OreBand>,
    /// First matching region wins; uncovered columns fall back to `plains`.
    pub biome_layout: Vec<BiomeRegion>,
    #[serde(default)]
    pub hazard_lava: bool,
}

impl Default for WorldConfig {
    fn default() -> Self {
        let band = |y_min, y_max, density| OreBand {
            y_min,
            y_max,
            density,
        };
        let ore_bands = BTreeMap::from([
            ("coal_ore".to_string(), band(20, 54, 0.5)),
            ("iron_ore".to_string(), band(44, 62, 0.6)),
            ("gold_ore".to_string(), band(4, 30, 0.2)),
            ("redstone_ore".to_string(), band(2, 14, 0.3)),
            ("diamond_ore".to_string(), band(10, 12, 0.9)),
        ]);
        WorldConfig {
            seed: 0,
            dims: [256, 64, 256],
            ore_bands,
            biome_layout: vec![
                BiomeRegion {
                    name: "forest".into(),
                    x_min: 0,
                    z_min: 0,
                    x_max: 127,
                    z_max: 255,
                },
                BiomeRegion {
                    name: "plains".into(),
                    x_min: 128,
                    z_min: 0,
                    x_max: 255,
                    z_max: 255,
                },
            ],
            hazard_lava: false,
        }
    }
}

impl WorldConfig {
    pub fn with_seed(seed: u64) -> Self {
        WorldConfig {
            seed,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let err = |field: &str, reason: String| Error::Config {
            field: field.to_string(),
            reason,
        };
        if self.dims.iter().any(|&d| d <= 0) {
            return Err(err("dims", format!("{:?} must be strictly positive", self.dims)));
        }
        if self.dims[1] < 16 {
            return Err(err("dims", "height must be at least 16".into()));
        }
        for (name, band) in &self.ore_bands {
            let field = format!("ore_bands.{name}");
            if BlockKind::from_name(name).is_none() {
                return Err(err(&field, "unknown block".into()));
            }
            if !(0 <= band.y_min && band.y_min <= band.y_max && band.y_max < self.dims[1]) {
                return Err(err(
                    &field,
                    format!("band [{}, {}] outside [0, {})", band.y_min, band.y_max, self.dims[1]),
                ));
            }
            if !(band.density > 0.0 && band.density <= 1.0) {
                return Err(err(&field, format!("density {} not in (0, 1]", band.density)));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: WorldConfig =
            serde_json::from_str(text).map_err(|e| Error::json("world config", e))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Clone, Debug)]
pub struct World {
    pub config: WorldConfig,
    pub rules: Rules,
    blocks: Vec<BlockKind>,
    surface: Vec<i32>,
    pub entities: Vec<Entity>,
    pub item_drops: Vec<ItemDrop>,
    pub tick_count: u64,
    pub(crate) rng: ChaCha8Rng,
}

impl World {
    /// World whose blocks come from `f`, with no entities. The recorded
    /// surface of each column is its highest solid block.
    pub fn from_fn(config: &WorldConfig, f: impl Fn(Cell) -> BlockKind) -> Result<World> {
        use rand::SeedableRng;
        config.validate()?;
        let [dx, dy, dz] = config.dims;
        let mut world = World {
            config: config.clone(),
            rules: Rules::default(),
            blocks: vec![BlockKind::Air; dx as usize * dy as usize * dz as usize],
            surface: vec![0; dx as usize * dz as usize],
            entities: Vec::new(),
            item_drops: Vec::new(),
            tick_count: 0,
            rng: ChaCha8Rng::seed_from_u64(config.seed),
        };
        for z in 0..dz {
            for x in 0..dx {
                let mut top = 0;
                for y in 0..dy {
                    let c = Cell::new(x, y, z);
                    let k = f(c);
                    world.set_block(c, k);
                    if k.is_solid() {
                        top = y;
                    }
                }
                world.surface[(z * dx + x) as usize] = top;
            }
        }
        Ok(world)
    }

    pub fn dims(&self) -> [i32; 3] {
        self.config.dims
    }

    pub fn in_bounds(&self, c: Cell) -> bool {
        let [dx, dy, dz] = self.config.dims;
        c.x >= 0 && c.y >= 0 && c.z >= 0 && c.x < dx && c.y < dy && c.z < dz
    }

    fn index(&self, c: Cell) -> usize {
        let [dx, dy, _] = self.config.dims;
        ((c.z as usize * dx as usize) + c.x as usize) * dy as usize + c.y as usize
    }

    /// Out-of-bounds reads as bedrock so nothing escapes the box.
    pub fn block(&self, c: Cell) -> BlockKind {
        if self.in_bounds(c) {
            self.blocks[self.index(c)]
        } else {
            BlockKind::Bedrock
        }
    }

    pub fn set_block(&mut self, c: Cell, kind: BlockKind) {
        if self.in_bounds(c) {
            let i = self.index(c);
            self.blocks[i] = kind;
        }
    }

    pub fn blocks(&self) -> &[BlockKind] {
        &self.blocks
    }

    /// y of the topmost ground block (grass) of the generated terrain column.
    pub fn surface_height(&self, x: i32, z: i32) -> i32 {
        let [dx, _, dz] = self.config.dims;
        let x = x.clamp(0, dx - 1);
        let z = z.clamp(0, dz - 1);
        self.surface[(z * dx + x) as usize]
    }

    pub fn biome_at(&self, x: i32, z: i32) -> &str {
        self.config
            .biome_layout
            .iter()
            .find(|r| x >= r.x_min && x <= r.x_max && z >= r.z_min && z <= r.z_max)
            .map(|r| r.name.as_str())
            .unwrap_or("plains")
    }

    pub fn entity_at(&self, c: Cell) -> Option<&Entity> {
        self.entities.iter().find(|e| e.pos == c)
    }

    pub fn spawn_drop(&mut self, pos: Cell, item: &str, count: u32) {
        self.item_drops.push(ItemDrop {
            pos,
            item: item.to_string(),
            count,
        });
    }

    /// Cells an agent body can occupy.
    pub fn is_passable(&self, c: Cell) -> bool {
        self.in_bounds(c) && self.block(c) == BlockKind::Air
    }

    /// Highest y whose block is opaque, scanning down from the top.
    pub fn top_solid(&self, x: i32, z: i32) -> i32 {
        let top = self.config.dims[1] - 1;
        (0..=top)
            .rev()
            .find(|&y| self.block(Cell::new(x, y, z)).is_solid())
            .unwrap_or(0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroundStatus {
    OnGround,
    Underground,
}

impl fmt::Display for GroundStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GroundStatus::OnGround => "on the ground",
            GroundStatus::Underground => "underground",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgentState {
    /// Feet position in block units; kept at cell centers by the simulator.
    pub position: [f64; 3],
    pub yaw: f64,
    pub pitch: f64,
    pub health: i32,
    pub inventory: BTreeMap<String, u32>,
    pub equipped: Option<String>,
    pub ground_status: GroundStatus,
    pub dig_anchor: Option<Cell>,
    /// Ticks of gravity suspension left after a jump.
    #[serde(default)]
    pub hover: u8,
}

/// Eye height above the feet, in blocks (center of the head cell).
pub const EYE_HEIGHT: f64 = 1.5;

impl AgentState {
    pub fn at(cell: Cell) -> Self {
        AgentState {
            position: [cell.x as f64 + 0.5, cell.y as f64, cell.z as f64 + 0.5],
            yaw: 0.0,
            pitch: 0.0,
            health: 20,
            inventory: BTreeMap::new(),
            equipped: None,
            ground_status: GroundStatus::OnGround,
            dig_anchor: None,
            hover: 0,
        }
    }

    pub fn feet(&self) -> Cell {
        Cell::new(
            self.position[0].floor() as i32,
            self.position[1].floor() as i32,
            self.position[2].floor() as i32,
        )
    }

    pub fn head(&self) -> Cell {
        self.feet().up()
    }

    pub fn set_feet(&mut self, c: Cell) {
        self.position = [c.x as f64 + 0.5, c.y as f64, c.z as f64 + 0.5];
    }

    pub fn eye(&self) -> [f64; 3] {
        [
            self.position[0],
            self.position[1] + EYE_HEIGHT,
            self.position[2],
        ]
    }

    pub fn count(&self, item: &str) -> u32 {
        self.inventory.get(item).copied().unwrap_or(0)
    }

    pub fn add_item(&mut self, item: &str, n: u32) {
        if n > 0 {
            *self.inventory.entry(item.to_string()).or_insert(0) += n;
        }
    }

    /// Removes up to `n`; returns false (and removes nothing) when short.
    pub fn remove_item(&mut self, item: &str, n: u32) -> bool {
        let have = self.count(item);
        if have < n {
            return false;
        }
        if have == n {
            self.inventory.remove(item);
            if self.equipped.as_deref() == Some(item) {
                self.equipped = None;
            }
        } else {
            self.inventory.insert(item.to_string(), have - n);
        }
        true
    }

    pub fn occupies(&self, c: Cell) -> bool {
        c == self.feet() || c == self.head()
    }
}

/// Raised when an episode's shared tick budget runs out.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BudgetExhausted;

/// One agent in one world under a tick budget.
#[derive(Clone, Debug)]
pub struct Sim {
    pub world: World,
    pub agent: AgentState,
    pub tick_limit: u64,
}

impl Sim {
    pub fn new(world: World, agent: AgentState, tick_limit: u64) -> Self {
        Sim {
            world,
            agent,
            tick_limit,
        }
    }

    /// World with the agent standing at the spawn column.
    pub fn spawn(config: &WorldConfig, tick_limit: u64) -> Result<Self> {
        let world = generate_world(config)?;
        let spawn = gen::spawn_point(&world);
        Ok(Sim::new(world, AgentState::at(spawn), tick_limit))
    }

    pub fn ticks_left(&self) -> u64 {
        self.tick_limit.saturating_sub(self.world.tick_count)
    }

    /// Applies one primitive and advances one tick.
    pub fn step(&mut self, p: Primitive) -> Result<Vec<Event>, BudgetExhausted> {
        if self.ticks_left() == 0 {
            return Err(BudgetExhausted);
        }
        let mut events = self.world.apply_primitive(&mut self.agent, &p);
        events.extend(self.world.tick(&mut self.agent));
        Ok(events)
    }

    /// Lets one tick pass without input (used by inventory-only actions).
    pub fn idle(&mut self) -> Result<Vec<Event>, BudgetExhausted> {
        if self.ticks_left() == 0 {
            return Err(BudgetExhausted);
        }
        Ok(self.world.tick(&mut self.agent))
    }

    pub fn observe(&self) -> Observation {
        observe(&self.world, &self.agent)
    }

    pub fn biome(&self) -> String {
        let f = self.agent.feet();
        self.world.biome_at(f.x, f.z).to_string()
    }
}
