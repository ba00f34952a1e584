use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::{AgentState, BlockKind, Cell, EntityKind, GroundStatus, World};

/// Maximum LiDAR ray travel in blocks.
pub const LIDAR_RANGE: f64 = 30.0;
/// Chebyshev radius of the navigation voxel patch.
pub const PATCH_RADIUS: i32 = 10;
pub const RAY_STEP_DEG: i32 = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type", content = "kind")]
pub enum HitKind {
    Block(BlockKind),
    Entity(EntityKind),
}

impl HitKind {
    pub fn name(self) -> &'static str {
        match self {
            HitKind::Block(b) => b.name(),
            HitKind::Entity(e) => e.name(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LidarHit {
    pub yaw: i32,
    pub pitch: i32,
    /// ℓ∞ distance in blocks from the nearest body cell to the hit cell.
    pub distance: Option<u32>,
    pub kind: Option<HitKind>,
    /// Ray travel from the eye to the hit face.
    pub travel: f64,
    pub cell: Option<Cell>,
    pub entity: Option<u32>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VoxelPatch {
    pub origin: Cell,
    pub size: i32,
    pub kinds: Vec<BlockKind>,
}

impl VoxelPatch {
    pub fn contains(&self, c: Cell) -> bool {
        let d = (c.x - self.origin.x, c.y - self.origin.y, c.z - self.origin.z);
        d.0 >= 0 && d.1 >= 0 && d.2 >= 0 && d.0 < self.size && d.1 < self.size && d.2 < self.size
    }

    pub fn get(&self, c: Cell) -> Option<BlockKind> {
        if !self.contains(c) {
            return None;
        }
        let (x, y, z) = (c.x - self.origin.x, c.y - self.origin.y, c.z - self.origin.z);
        Some(self.kinds[((z * self.size + x) * self.size + y) as usize])
    }

    pub fn cells(&self) -> impl Iterator<Item = (Cell, BlockKind)> + '_ {
        let s = self.size;
        let o = self.origin;
        (0..s).flat_map(move |z| {
            (0..s).flat_map(move |x| {
                (0..s).map(move |y| {
                    let c = o.offset(x, y, z);
                    (c, self.kinds[((z * s + x) * s + y) as usize])
                })
            })
        })
    }

    pub fn center(&self) -> Cell {
        self.origin
            .offset(self.size / 2, self.size / 2, self.size / 2)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub lidar_hits: Vec<LidarHit>,
    pub voxel_patch: VoxelPatch,
    pub inventory: BTreeMap<String, u32>,
    pub biome: String,
    pub y_level: i32,
    pub ground_status: GroundStatus,
    pub health: i32,
}

impl Observation {
    /// Distinct cells of `kind` seen by any ray, nearest first.
    pub fn visible_blocks(&self, kind: BlockKind) -> Vec<(Cell, &LidarHit)> {
        let mut best: BTreeMap<Cell, &LidarHit> = BTreeMap::new();
        for h in &self.lidar_hits {
            if h.kind == Some(HitKind::Block(kind)) {
                let c = h.cell.expect("block hit has a cell");
                match best.get(&c) {
                    Some(prev) if prev.travel <= h.travel => {}
                    _ => {
                        best.insert(c, h);
                    }
                }
            }
        }
        let mut out: Vec<_> = best.into_iter().collect();
        out.sort_by(|a, b| a.1.travel.total_cmp(&b.1.travel).then(a.0.cmp(&b.0)));
        out
    }

    /// Distinct entities of `kind` seen by any ray, nearest first.
    pub fn visible_entities(&self, kind: EntityKind) -> Vec<(u32, &LidarHit)> {
        let mut best: BTreeMap<u32, &LidarHit> = BTreeMap::new();
        for h in &self.lidar_hits {
            if h.kind == Some(HitKind::Entity(kind)) {
                let id = h.entity.expect("entity hit has an id");
                match best.get(&id) {
                    Some(prev) if prev.travel <= h.travel => {}
                    _ => {
                        best.insert(id, h);
                    }
                }
            }
        }
        let mut out: Vec<_> = best.into_iter().collect();
        out.sort_by(|a, b| a.1.travel.total_cmp(&b.1.travel).then(a.0.cmp(&b.0)));
        out
    }

    pub fn sees(&self, name: &str) -> bool {
        self.lidar_hits
            .iter()
            .any(|h| h.kind.map(|k| k.name() == name).unwrap_or(false))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RayHit {
    pub cell: Cell,
    /// Last cell traversed before the hit cell (the face the ray entered through).
    pub prev: Cell,
    pub travel: f64,
    pub kind: HitKind,
    pub entity: Option<u32>,
}

pub fn direction(yaw_deg: f64, pitch_deg: f64) -> [f64; 3] {
    let (y, p) = (yaw_deg.to_radians(), pitch_deg.to_radians());
    [p.cos() * y.cos(), p.sin(), p.cos() * y.sin()]
}

/// Yaw/pitch in degrees pointing from `from` toward `to`.
pub fn aim(from: [f64; 3], to: [f64; 3]) -> (f64, f64) {
    let d = [to[0] - from[0], to[1] - from[1], to[2] - from[2]];
    let horiz = (d[0] * d[0] + d[2] * d[2]).sqrt();
    let yaw = d[2].atan2(d[0]).to_degrees().rem_euclid(360.0);
    let pitch = d[1].atan2(horiz).to_degrees();
    (yaw, pitch)
}

/// Voxel traversal from `origin` along `dir`. Cells in `skip` are transparent;
/// `stop` decides which blocks end the ray. Rays leaving the box return `None`.
pub fn cast_ray_with(
    world: &World,
    entities: &HashMap<Cell, (u32, EntityKind)>,
    origin: [f64; 3],
    dir: [f64; 3],
    max_t: f64,
    skip: &[Cell],
    stop: impl Fn(BlockKind) -> bool,
) -> Option<RayHit> {
    let mut cell = [
        origin[0].floor() as i32,
        origin[1].floor() as i32,
        origin[2].floor() as i32,
    ];
    let mut step = [0i32; 3];
    let mut t_max = [f64::INFINITY; 3];
    let mut t_delta = [f64::INFINITY; 3];
    for a in 0..3 {
        if dir[a] > 1e-12 {
            step[a] = 1;
            t_max[a] = ((cell[a] + 1) as f64 - origin[a]) / dir[a];
            t_delta[a] = 1.0 / dir[a];
        } else if dir[a] < -1e-12 {
            step[a] = -1;
            t_max[a] = (cell[a] as f64 - origin[a]) / dir[a];
            t_delta[a] = -1.0 / dir[a];
        }
    }
    let mut t = 0.0;
    let mut prev = Cell::new(cell[0], cell[1], cell[2]);
    loop {
        let c = Cell::new(cell[0], cell[1], cell[2]);
        if !world.in_bounds(c) {
            return None;
        }
        if !skip.contains(&c) {
            if let Some(&(id, kind)) = entities.get(&c) {
                return Some(RayHit {
                    cell: c,
                    prev,
                    travel: t,
                    kind: HitKind::Entity(kind),
                    entity: Some(id),
                });
            }
            let b = world.block(c);
            if stop(b) {
                return Some(RayHit {
                    cell: c,
                    prev,
                    travel: t,
                    kind: HitKind::Block(b),
                    entity: None,
                });
            }
        }
        let a = if t_max[0] <= t_max[1] && t_max[0] <= t_max[2] {
            0
        } else if t_max[1] <= t_max[2] {
            1
        } else {
            2
        };
        t = t_max[a];
        if t > max_t {
            return None;
        }
        prev = c;
        cell[a] += step[a];
        t_max[a] += t_delta[a];
    }
}

pub fn entity_index(world: &World) -> HashMap<Cell, (u32, EntityKind)> {
    world
        .entities
        .iter()
        .map(|e| (e.pos, (e.id, e.kind)))
        .collect()
}

/// Single ray from the agent's eye, stopping at the first opaque block or entity.
pub fn cast_ray(world: &World, agent: &AgentState, yaw: f64, pitch: f64, max_t: f64) -> Option<RayHit> {
    let entities = entity_index(world);
    cast_ray_with(
        world,
        &entities,
        agent.eye(),
        direction(yaw, pitch),
        max_t,
        &[agent.feet(), agent.head()],
        BlockKind::is_opaque,
    )
}

/// LiDAR scan at 5° steps plus the radius-10 voxel patch.
pub fn observe(world: &World, agent: &AgentState) -> Observation {
    let entities = entity_index(world);
    let eye = agent.eye();
    let body = [agent.feet(), agent.head()];
    let mut lidar_hits = Vec::with_capacity(72 * 37);
    for yi in 0..(360 / RAY_STEP_DEG) {
        let yaw = yi * RAY_STEP_DEG;
        for pi in 0..=(180 / RAY_STEP_DEG) {
            let pitch = -90 + pi * RAY_STEP_DEG;
            let hit = cast_ray_with(
                world,
                &entities,
                eye,
                direction(yaw as f64, pitch as f64),
                LIDAR_RANGE,
                &body,
                BlockKind::is_opaque,
            );
            lidar_hits.push(match hit {
                Some(h) => LidarHit {
                    yaw,
                    pitch,
                    distance: Some(h.cell.chebyshev(body[0]).min(h.cell.chebyshev(body[1])) as u32),
                    kind: Some(h.kind),
                    travel: h.travel,
                    cell: Some(h.cell),
                    entity: h.entity,
                },
                None => LidarHit {
                    yaw,
                    pitch,
                    distance: None,
                    kind: None,
                    travel: LIDAR_RANGE,
                    cell: None,
                    entity: None,
                },
            });
        }
    }

    let feet = agent.feet();
    Observation {
        lidar_hits,
        voxel_patch: voxel_patch(world, agent),
        inventory: agent.inventory.clone(),
        biome: world.biome_at(feet.x, feet.z).to_string(),
        y_level: feet.y,
        ground_status: agent.ground_status,
        health: agent.health,
    }
}

/// Block kinds within `PATCH_RADIUS` of the feet cell, without any rays.
pub fn voxel_patch(world: &World, agent: &AgentState) -> VoxelPatch {
    let feet = agent.feet();
    let size = 2 * PATCH_RADIUS + 1;
    let origin = feet.offset(-PATCH_RADIUS, -PATCH_RADIUS, -PATCH_RADIUS);
    let top = world.dims()[1];
    let mut kinds = Vec::with_capacity((size * size * size) as usize);
    for z in 0..size {
        for x in 0..size {
            for y in 0..size {
                let c = origin.offset(x, y, z);
                kinds.push(if world.in_bounds(c) {
                    world.block(c)
                } else if c.y >= top {
                    BlockKind::Air
                } else {
                    BlockKind::Bedrock
                });
            }
        }
    }

    VoxelPatch {
        origin,
        size,
        kinds,
    }
}
