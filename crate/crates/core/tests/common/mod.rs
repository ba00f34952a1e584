//! Shared oracles for the integration tests.
#![allow(dead_code)]

use std::collections::{HashMap, VecDeque};

use blockmind::actions::NavGrid;
use blockmind::world::Cell;

pub const N: i32 = 32;

pub struct Grid {
    pub solid: Vec<bool>,
}

impl Grid {
    pub fn inside(c: Cell) -> bool {
        (0..N).contains(&c.x) && (0..N).contains(&c.y) && (0..N).contains(&c.z)
    }
    pub fn idx(c: Cell) -> usize {
        ((c.z * N + c.x) * N + c.y) as usize
    }
    pub fn is_solid(&self, c: Cell) -> bool {
        Self::inside(c) && self.solid[Self::idx(c)]
    }
    pub fn is_air(&self, c: Cell) -> bool {
        Self::inside(c) && !self.solid[Self::idx(c)]
    }
}

impl NavGrid for Grid {
    fn solid(&self, c: Cell) -> bool {
        self.is_solid(c)
    }
    fn passable(&self, c: Cell) -> bool {
        self.is_air(c)
    }
}

/// Uniform-cost breadth-first search; the cost-2 pillar goes through an
/// intermediate half-way node so every edge has unit weight.
pub fn oracle(g: &Grid, start: Cell, target: Cell, budget: u32) -> Option<u32> {
    #[derive(Clone, Copy, PartialEq, Eq, Hash)]
    enum Node {
        At(Cell, u32),
        Mid(Cell, u32),
    }
    let done = |c: Cell| c.chebyshev(target) < 2;
    let mut dist: HashMap<Node, u32> = HashMap::new();
    let mut q = VecDeque::new();
    dist.insert(Node::At(start, 0), 0);
    q.push_back(Node::At(start, 0));
    while let Some(n) = q.pop_front() {
        let d = dist[&n];
        let mut next = Vec::new();
        match n {
            Node::Mid(c, u) => next.push(Node::At(c, u)),
            Node::At(c, u) => {
                if done(c) {
                    return Some(d);
                }
                for (dx, dz) in [(0, -1), (1, 0), (0, 1), (-1, 0)] {
                    let a = c.offset(dx, 0, dz);
                    if g.is_air(a) && g.is_air(a.up()) {
                        if g.is_solid(a.down()) {
                            next.push(Node::At(a, u));
                        } else {
                            for k in 1..=3 {
                                let l = a.offset(0, -k, 0);
                                if !g.is_air(l) {
                                    break;
                                }
                                if g.is_solid(l.down()) {
                                    next.push(Node::At(l, u));
                                    break;
                                }
                            }
                        }
                    } else if g.is_solid(a)
                        && g.is_air(c.up().up())
                        && g.is_air(a.up())
                        && g.is_air(a.up().up())
                    {
                        next.push(Node::At(a.up(), u));
                    }
                }
                if u < budget && g.is_air(c.up().up()) && g.is_air(c) {
                    next.push(Node::Mid(c.up(), u + 1));
                }
            }
        }
        for m in next {
            if let std::collections::hash_map::Entry::Vacant(e) = dist.entry(m) {
                e.insert(d + 1);
                q.push_back(m);
            }
        }
    }
    None
}

pub fn terrain(seed: u64, fill: f64) -> Grid {
    use rand::{Rng, SeedableRng};
    let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
    let mut solid = vec![false; (N * N * N) as usize];
    for z in 0..N {
        for x in 0..N {
            let h = rng.gen_range(1..6);
            for y in 0..N {
                let c = Cell::new(x, y, z);
                solid[Grid::idx(c)] = y < h || (y < 20 && rng.gen_bool(fill));
            }
        }
    }
    Grid { solid }
}

pub fn standable(g: &Grid, c: Cell) -> bool {
    g.is_air(c) && g.is_air(c.up()) && g.is_solid(c.down())
}

pub fn pick(g: &Grid, raw: (i32, i32), need_stand: bool) -> Option<Cell> {
    (1..N - 1)
        .map(|y| Cell::new(raw.0, y, raw.1))
        .find(|&c| if need_stand { standable(g, c) } else { g.is_air(c) })
}


/// Raw recipe and fact tables, read without the knowledge-base loader.
pub struct Tables {
    pub recipes: serde_json::Value,
    pub facts: serde_json::Value,
}

impl Tables {
    pub fn bundled() -> Tables {
        Tables {
            recipes: serde_json::from_str(include_str!("../../data/recipes.json")).unwrap(),
            facts: serde_json::from_str(include_str!("../../data/facts.json")).unwrap(),
        }
    }

    fn recipe(&self, item: &str) -> Option<&serde_json::Value> {
        self.recipes.as_array().unwrap().iter().find(|r| r["output"] == item)
    }

    fn pickaxe_for(&self, item: &str) -> Option<String> {
        let fact = self.facts.as_array().unwrap().iter().find(|f| f["item"] == item)?;
        let tier = fact["hints"]["min_tool_tier"].as_str()?;
        Some(match tier {
            "wood" => "wooden_pickaxe".to_string(),
            other => format!("{other}_pickaxe"),
        })
    }

    /// Direct prerequisites with quantities: materials scaled by batches, then the tool.
    pub fn prerequisites(&self, item: &str, count: u32) -> Vec<(String, u32)> {
        match self.recipe(item) {
            Some(r) => {
                let per = r["output_count"].as_u64().unwrap() as u32;
                let batches = count.div_ceil(per);
                let mut out: Vec<(String, u32)> = r["materials"]
                    .as_object()
                    .unwrap()
                    .iter()
                    .map(|(m, n)| (m.clone(), n.as_u64().unwrap() as u32 * batches))
                    .collect();
                if let Some(t) = r["tool"].as_str() {
                    out.push((t.to_string(), 1));
                }
                out
            }
            None => self.pickaxe_for(item).map(|t| vec![(t, 1)]).unwrap_or_default(),
        }
    }

    /// Every node of the expansion of `item`, duplicates included, by brute-force recursion.
    pub fn closure(&self, item: &str, count: u32) -> std::collections::BTreeMap<(String, u32), usize> {
        let mut out = std::collections::BTreeMap::new();
        let mut stack = vec![(item.to_string(), count)];
        while let Some(node) = stack.pop() {
            stack.extend(self.prerequisites(&node.0, node.1));
            *out.entry(node).or_insert(0) += 1;
        }
        out
    }

    pub fn items(&self) -> Vec<String> {
        let mut v: Vec<String> = self
            .recipes
            .as_array()
            .unwrap()
            .iter()
            .map(|r| r["output"].as_str().unwrap().to_string())
            .chain(self.facts.as_array().unwrap().iter().map(|f| f["item"].as_str().unwrap().to_string()))
            .collect();
        v.sort();
        v.dedup();
        v
    }
}

/// Checks that each scheduled goal has all its prerequisites earlier in the list.
pub fn topologically_valid(tables: &Tables, order: &[(String, u32)]) -> Result<(), String> {
    for (i, (item, count)) in order.iter().enumerate() {
        for (p, _) in tables.prerequisites(item, *count) {
            if !order[..i].iter().any(|(o, _)| *o == p) {
                return Err(format!("{item} at {i} comes before its prerequisite {p}"));
            }
        }
    }
    Ok(())
}

/// Identity of a step for subsequence checks: action name and object.
pub fn step_key(a: &blockmind::StructuredAction) -> (String, String) {
    (a.name().to_string(), a.action.object())
}

pub fn is_subsequence(sub: &[blockmind::StructuredAction], of: &[blockmind::StructuredAction]) -> bool {
    let mut it = of.iter().map(step_key);
    sub.iter().map(step_key).all(|k| it.any(|x| x == k))
}

/// Random action lists over a small alphabet so overlaps are common.
pub fn arb_sequence() -> impl proptest::strategy::Strategy<Value = Vec<blockmind::StructuredAction>> {
    use blockmind::actions::Action;
    use proptest::prelude::*;
    let objects = prop::sample::select(vec!["log", "stone", "iron_ore"]);
    let action = (0u8..5, objects, 2i32..60).prop_map(|(k, o, y)| {
        let a = match k {
            0 => Action::Explore { object: o.into(), strategy: "dfs".into() },
            1 => Action::Approach { object: o.into() },
            2 => Action::Mine { object: o.into(), tool: None, count: None },
            3 => Action::DigDown { ylevel: y },
            _ => Action::GoUp,
        };
        blockmind::StructuredAction::new(a)
    });
    prop::collection::vec(action, 0..12)
}
