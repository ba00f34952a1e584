use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{BlockKind, Cell, Entity, EntityKind, Rules, World, WorldConfig};
use crate::error::Result;

const CHUNK: i32 = 16;
const VEIN_ATTEMPTS: usize = 8;
const HEIGHT_LATTICE: i32 = 24;
const TRUNK_HEIGHT: i32 = 4;

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

fn lattice(seed: u64, i: i32, j: i32) -> f64 {
    let h = splitmix(seed ^ splitmix((i as u64) << 32 ^ (j as u32 as u64)));
    (h >> 11) as f64 / (1u64 << 53) as f64
}

fn value_noise(seed: u64, x: i32, z: i32) -> f64 {
    let fx = x as f64 / HEIGHT_LATTICE as f64;
    let fz = z as f64 / HEIGHT_LATTICE as f64;
    let (i, j) = (fx.floor() as i32, fz.floor() as i32);
    let smooth = |t: f64| t * t * (3.0 - 2.0 * t);
    let (tx, tz) = (smooth(fx - i as f64), smooth(fz - j as f64));
    let a = lattice(seed, i, j);
    let b = lattice(seed, i + 1, j);
    let c = lattice(seed, i, j + 1);
    let d = lattice(seed, i + 1, j + 1);
    let top = a + (b - a) * tx;
    let bottom = c + (d - c) * tx;
    top + (bottom - top) * tz
}

/// Builds the world for `config`. Fully determined by the seed.
pub fn generate_world(config: &WorldConfig) -> Result<World> {
    generate_world_with(config, Rules::default())
}

pub fn generate_world_with(config: &WorldConfig, rules: Rules) -> Result<World> {
    config.validate()?;
    let [dx, dy, dz] = config.dims;
    let mut world = World {
        config: config.clone(),
        rules,
        blocks: vec![BlockKind::Air; dx as usize * dy as usize * dz as usize],
        surface: vec![0; dx as usize * dz as usize],
        entities: Vec::new(),
        item_drops: Vec::new(),
        tick_count: 0,
        rng: ChaCha8Rng::seed_from_u64(config.seed),
    };
    // Separate stream for generation so the runtime rng starts at word 0.
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix(config.seed ^ 0x6765_6e65_7261_7465));

    let base = (dy - 8).max(4);
    for z in 0..dz {
        for x in 0..dx {
            let n = value_noise(config.seed, x, z);
            let s = base + (n * 2.99).floor() as i32;
            world.surface[(z * dx + x) as usize] = s;
            world.set_block(Cell::new(x, 0, z), BlockKind::Bedrock);
            for y in 1..=s {
                let kind = if y == s {
                    BlockKind::Grass
                } else if y >= s - 2 {
                    BlockKind::Dirt
                } else {
                    BlockKind::Stone
                };
                world.set_block(Cell::new(x, y, z), kind);
            }
        }
    }

    place_ores(&mut world, &mut rng);
    if config.hazard_lava {
        place_lava(&mut world, &mut rng);
    }
    place_ponds(&mut world, &mut rng);
    place_trees(&mut world, &mut rng);
    spawn_entities(&mut world, &mut rng);
    Ok(world)
}

/// Vein-center y distribution: squared triangular weights peaking mid-band.
fn band_weights(y_min: i32, y_max: i32) -> Vec<(i32, f64)> {
    let mode = (y_min + y_max) as f64 / 2.0;
    let half = (y_max - y_min) as f64 / 2.0 + 1.0;
    (y_min..=y_max)
        .map(|y| {
            let w = (half - (y as f64 - mode).abs()).max(0.0);
            (y, w * w)
        })
        .collect()
}

fn sample_weighted(rng: &mut ChaCha8Rng, weights: &[(i32, f64)]) -> i32 {
    let total: f64 = weights.iter().map(|w| w.1).sum();
    let mut r = rng.gen::<f64>() * total;
    for &(y, w) in weights {
        if r < w {
            return y;
        }
        r -= w;
    }
    weights.last().map(|w| w.0).unwrap_or(0)
}

fn place_ores(world: &mut World, rng: &mut ChaCha8Rng) {
    let [dx, _, dz] = world.config.dims;
    let bands: Vec<(BlockKind, i32, i32, f64)> = world
        .config
        .ore_bands
        .iter()
        .filter_map(|(name, b)| {
            BlockKind::from_name(name).map(|k| (k, b.y_min, b.y_max, b.density))
        })
        .collect();
    let weights: BTreeMap<BlockKind, Vec<(i32, f64)>> = bands
        .iter()
        .map(|&(k, lo, hi, _)| (k, band_weights(lo, hi)))
        .collect();
    for cz in (0..dz).step_by(CHUNK as usize) {
        for cx in (0..dx).step_by(CHUNK as usize) {
            for &(kind, lo, hi, density) in &bands {
                for _ in 0..VEIN_ATTEMPTS {
                    if rng.gen::<f64>() >= density {
                        continue;
                    }
                    let x = cx + rng.gen_range(0..CHUNK);
                    let z = cz + rng.gen_range(0..CHUNK);
                    let y = sample_weighted(rng, &weights[&kind]);
                    let size = if kind == BlockKind::DiamondOre {
                        rng.gen_range(1..=3)
                    } else {
                        rng.gen_range(2..=5)
                    };
                    let mut c = Cell::new(x, y, z);
                    for _ in 0..size {
                        if world.block(c) == BlockKind::Stone {
                            world.set_block(c, kind);
                        }
                        let (ddx, ddy, ddz) = match rng.gen_range(0..6) {
                            0 => (1, 0, 0),
                            1 => (-1, 0, 0),
                            2 => (0, 1, 0),
                            3 => (0, -1, 0),
                            4 => (0, 0, 1),
                            _ => (0, 0, -1),
                        };
                        c = c.offset(ddx, ddy, ddz);
                        c.y = c.y.clamp(lo, hi);
                    }
                }
            }
        }
    }
}

fn place_lava(world: &mut World, rng: &mut ChaCha8Rng) {
    let [dx, _, dz] = world.config.dims;
    for cz in (0..dz).step_by(CHUNK as usize) {
        for cx in (0..dx).step_by(CHUNK as usize) {
            if rng.gen::<f64>() < 0.1 {
                let x = cx + rng.gen_range(0..CHUNK);
                let z = cz + rng.gen_range(0..CHUNK);
                let y = rng.gen_range(5..=12);
                for ox in -1..=1 {
                    for oz in -1..=1 {
                        let c = Cell::new(x + ox, y, z + oz);
                        if world.block(c) == BlockKind::Stone {
                            world.set_block(c, BlockKind::Lava);
                        }
                    }
                }
            }
        }
    }
}

fn place_ponds(world: &mut World, rng: &mut ChaCha8Rng) {
    let [dx, _, dz] = world.config.dims;
    for cz in (0..dz).step_by(CHUNK as usize) {
        for cx in (0..dx).step_by(CHUNK as usize) {
            let chance = if world.biome_at(cx, cz) == "plains" { 0.2 } else { 0.05 };
            if rng.gen::<f64>() >= chance {
                continue;
            }
            let x = cx + rng.gen_range(3..CHUNK - 3);
            let z = cz + rng.gen_range(3..CHUNK - 3);
            let r = rng.gen_range(1..=2);
            let s = world.surface_height(x, z);
            for ox in -(r + 1)..=(r + 1) {
                for oz in -(r + 1)..=(r + 1) {
                    let (px, pz) = (x + ox, z + oz);
                    let c = Cell::new(px, s, pz);
                    if !world.in_bounds(c) || world.surface_height(px, pz) != s {
                        continue;
                    }
                    if ox.abs() <= r && oz.abs() <= r {
                        world.set_block(c, BlockKind::Water);
                    } else if world.block(c) == BlockKind::Grass {
                        world.set_block(c, BlockKind::Sand);
                    }
                }
            }
        }
    }
}

fn place_trees(world: &mut World, rng: &mut ChaCha8Rng) {
    let [dx, dy, dz] = world.config.dims;
    let mut trunks: Vec<(i32, i32)> = Vec::new();
    for z in 2..dz - 2 {
        for x in 2..dx - 2 {
            let p = match world.biome_at(x, z) {
                "forest" => 0.03,
                _ => 0.004,
            };
            if rng.gen::<f64>() >= p {
                continue;
            }
            let s = world.surface_height(x, z);
            if world.block(Cell::new(x, s, z)) != BlockKind::Grass || s + TRUNK_HEIGHT + 1 >= dy {
                continue;
            }
            if trunks
                .iter()
                .rev()
                .take_while(|t| (z - t.1) <= 3)
                .any(|t| (x - t.0).abs() <= 3 && (z - t.1).abs() <= 3)
            {
                continue;
            }
            trunks.push((x, z));
            let top = s + TRUNK_HEIGHT;
            for y in top - 1..=top + 1 {
                let r: i32 = if y == top + 1 { 1 } else { 2 };
                for ox in -r..=r {
                    for oz in -r..=r {
                        if r == 2 && ox.abs() == 2 && oz.abs() == 2 {
                            continue;
                        }
                        let c = Cell::new(x + ox, y, z + oz);
                        if world.in_bounds(c) && world.block(c) == BlockKind::Air {
                            world.set_block(c, BlockKind::Leaves);
                        }
                    }
                }
            }
            for y in s + 1..=top {
                world.set_block(Cell::new(x, y, z), BlockKind::Log);
            }
        }
    }
}

fn spawn_entities(world: &mut World, rng: &mut ChaCha8Rng) {
    let [dx, _, dz] = world.config.dims;
    let mut next_id = 0;
    for cz in (0..dz).step_by(CHUNK as usize) {
        for cx in (0..dx).step_by(CHUNK as usize) {
            let chance = if world.biome_at(cx, cz) == "plains" { 0.4 } else { 0.15 };
            if rng.gen::<f64>() >= chance {
                continue;
            }
            let kind = EntityKind::ALL[rng.gen_range(0..4)];
            for _ in 0..rng.gen_range(1..=3) {
                let x = (cx + rng.gen_range(0..CHUNK)).min(dx - 1);
                let z = (cz + rng.gen_range(0..CHUNK)).min(dz - 1);
                let s = world.surface_height(x, z);
                let pos = Cell::new(x, s + 1, z);
                if world.block(pos.down()).is_solid()
                    && world.is_passable(pos)
                    && world.entity_at(pos).is_none()
                {
                    world.entities.push(Entity {
                        id: next_id,
                        kind,
                        pos,
                        health: kind.max_health(),
                        sheared: false,
                    });
                    next_id += 1;
                }
            }
        }
    }
}

/// Nearest open grass column to the map center, scanning outward in rings.
pub(crate) fn spawn_point(world: &World) -> Cell {
    let [dx, _, dz] = world.config.dims;
    let (cx, cz) = (dx / 2, dz / 2);
    for r in 0..dx.max(dz) {
        for oz in -r..=r {
            for ox in -r..=r {
                if ox.abs() != r && oz.abs() != r {
                    continue;
                }
                let (x, z) = (cx + ox, cz + oz);
                if x < 0 || z < 0 || x >= dx || z >= dz {
                    continue;
                }
                let s = world.surface_height(x, z);
                let feet = Cell::new(x, s + 1, z);
                if world.block(Cell::new(x, s, z)) == BlockKind::Grass
                    && world.is_passable(feet)
                    && world.is_passable(feet.up())
                    && world.entity_at(feet).is_none()
                {
                    return feet;
                }
            }
        }
    }
    Cell::new(cx, world.surface_height(cx, cz) + 1, cz)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn count_by_y(world: &World, kind: BlockKind) -> Vec<usize> {
        let [dx, dy, dz] = world.config.dims;
        let mut counts = vec![0; dy as usize];
        for z in 0..dz {
            for x in 0..dx {
                for y in 0..dy {
                    if world.block(Cell::new(x, y, z)) == kind {
                        counts[y as usize] += 1;
                    }
                }
            }
        }
        counts
    }

    #[test]
    fn same_config_same_world() {
        let cfg = WorldConfig::with_seed(7);
        let a = generate_world(&cfg).unwrap();
        let b = generate_world(&cfg).unwrap();
        assert_eq!(a.blocks, b.blocks);
        assert_eq!(a.entities, b.entities);
    }

    #[test]
    fn diamond_confined_to_band() {
        let w = generate_world(&WorldConfig::with_seed(3)).unwrap();
        let counts = count_by_y(&w, BlockKind::DiamondOre);
        assert!(counts.iter().sum::<usize>() > 0);
        for (y, &n) in counts.iter().enumerate() {
            if n > 0 {
                assert!((10..=12).contains(&y), "diamond at y={y}");
            }
        }
    }

    #[test]
    fn iron_peaks_at_53() {
        let mut total = vec![0usize; 64];
        for seed in 0..4 {
            let w = generate_world(&WorldConfig::with_seed(seed)).unwrap();
            for (y, n) in count_by_y(&w, BlockKind::IronOre).into_iter().enumerate() {
                total[y] += n;
            }
        }
        let peak = total
            .iter()
            .enumerate()
            .max_by_key(|(_, &n)| n)
            .map(|(y, _)| y)
            .unwrap();
        assert_eq!(peak, 53, "{total:?}");
    }

    #[test]
    fn rejects_bad_band() {
        let mut cfg = WorldConfig::default();
        cfg.ore_bands.get_mut("diamond_ore").unwrap().y_max = 80;
        let err = generate_world(&cfg).unwrap_err().to_string();
        assert!(err.contains("ore_bands.diamond_ore"), "{err}");

        let mut cfg = WorldConfig::default();
        cfg.ore_bands.get_mut("iron_ore").unwrap().density = 0.0;
        assert!(generate_world(&cfg).is_err());

        let cfg = WorldConfig {
            dims: [0, 64, 10],
            ..Default::default()
        };
        assert!(generate_world(&cfg).unwrap_err().to_string().contains("dims"));
    }

    #[test]
    fn spawn_is_standable() {
        let w = generate_world(&WorldConfig::with_seed(11)).unwrap();
        let s = spawn_point(&w);
        assert!(w.block(s.down()).is_solid());
        assert!(w.is_passable(s) && w.is_passable(s.up()));
    }
}
