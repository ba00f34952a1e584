//! Recipe and fact tables, goal construction and item information lookup.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::world::{BlockKind, EntityKind, Rules, Tier};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Station {
    Craft,
    Smelt,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Recipe {
    pub output: String,
    pub output_count: u32,
    pub materials: BTreeMap<String, u32>,
    #[serde(default)]
    pub tool: Option<String>,
    pub station: Station,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Mine,
    Mob,
    Plant,
    Craft,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Hints {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y_band: Option<[i32; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<Source>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_tool_tier: Option<Tier>,
    /// Block that yields the item when broken.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub block: Option<String>,
    /// Mob that drops the item.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entity: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tool_tier: Option<Tier>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub damage: Option<i32>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FactEntry {
    pub item: String,
    pub info_text: String,
    #[serde(default)]
    pub hints: Hints,
    #[serde(default)]
    pub aliases: Vec<String>,
}

/// Where an item comes from in the world.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Target {
    Block(BlockKind),
    Entity(EntityKind),
}

/// One unit of work: obtain `count` of `object`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Goal {
    pub object: String,
    pub count: u32,
    /// Materials consumed to produce `count` units, already scaled.
    pub material: Option<BTreeMap<String, u32>>,
    pub tool: Option<String>,
    pub info: String,
}

impl Goal {
    pub fn is_satisfied(&self, inventory: &BTreeMap<String, u32>) -> bool {
        inventory.get(&self.object).copied().unwrap_or(0) >= self.count
    }

    /// Same goal with the information text blanked.
    pub fn without_info(mut self) -> Self {
        self.info.clear();
        self
    }
}

/// Anything that can produce a short information text for an item.
pub trait InfoRetriever {
    fn retrieve(&self, item: &str) -> String;
}

#[derive(Clone, Debug)]
pub struct KnowledgeBase {
    recipes: BTreeMap<String, Recipe>,
    facts: BTreeMap<String, FactEntry>,
    aliases: BTreeMap<String, String>,
}

const BUNDLED_RECIPES: &str = include_str!("../data/recipes.json");
const BUNDLED_FACTS: &str = include_str!("../data/facts.json");

impl KnowledgeBase {
    /// The tables shipped with the crate.
    pub fn bundled() -> &'static KnowledgeBase {
        static KB: OnceLock<KnowledgeBase> = OnceLock::new();
        KB.get_or_init(|| {
            KnowledgeBase::from_json(BUNDLED_RECIPES, BUNDLED_FACTS)
                .expect("bundled knowledge base is valid")
        })
    }

    /// Reads `recipes.json` and `facts.json` from a directory.
    pub fn load(dir: &Path) -> Result<Self> {
        let read = |name: &str| {
            let p = dir.join(name);
            std::fs::read_to_string(&p).map_err(|e| Error::io(p, e))
        };
        KnowledgeBase::from_json(&read("recipes.json")?, &read("facts.json")?)
    }

    pub fn from_json(recipes: &str, facts: &str) -> Result<Self> {
        let recipes: Vec<Recipe> =
            serde_json::from_str(recipes).map_err(|e| Error::json("recipes", e))?;
        let facts: Vec<FactEntry> =
            serde_json::from_str(facts).map_err(|e| Error::json("facts", e))?;
        KnowledgeBase::new(recipes, facts)
    }

    pub fn new(recipes: Vec<Recipe>, facts: Vec<FactEntry>) -> Result<Self> {
        let mut kb = KnowledgeBase {
            recipes: BTreeMap::new(),
            facts: BTreeMap::new(),
            aliases: BTreeMap::new(),
        };
        for r in recipes {
            if kb.recipes.contains_key(&r.output) {
                return Err(kerr(&r.output, "duplicate recipe"));
            }
            kb.recipes.insert(r.output.clone(), r);
        }
        for f in facts {
            if kb.facts.contains_key(&f.item) {
                return Err(kerr(&f.item, "duplicate fact entry"));
            }
            for a in &f.aliases {
                if let Some(prev) = kb.aliases.insert(a.clone(), f.item.clone()) {
                    return Err(kerr(a, &format!("alias claimed by `{prev}` and `{}`", f.item)));
                }
            }
            kb.facts.insert(f.item.clone(), f);
        }
        kb.validate()?;
        Ok(kb)
    }

    fn validate(&self) -> Result<()> {
        for (alias, item) in &self.aliases {
            if self.is_known(alias) && alias != item {
                return Err(kerr(alias, "alias shadows an item name"));
            }
        }
        for r in self.recipes.values() {
            if r.output_count == 0 {
                return Err(kerr(&r.output, "output_count must be at least 1"));
            }
            if r.materials.is_empty() {
                return Err(kerr(&r.output, "recipe has no materials"));
            }
            for (m, &n) in &r.materials {
                if n == 0 {
                    return Err(kerr(&r.output, &format!("material `{m}` has count 0")));
                }
                if !self.is_known(m) {
                    return Err(kerr(&r.output, &format!("unknown material `{m}`")));
                }
            }
            if let Some(t) = &r.tool {
                if !self.is_known(t) {
                    return Err(kerr(&r.output, &format!("unknown tool `{t}`")));
                }
            }
        }
        for f in self.facts.values() {
            let h = &f.hints;
            if let Some(b) = &h.block {
                if BlockKind::from_name(b).is_none() {
                    return Err(kerr(&f.item, &format!("unknown block `{b}`")));
                }
            }
            if let Some(e) = &h.entity {
                if EntityKind::from_name(e).is_none() {
                    return Err(kerr(&f.item, &format!("unknown entity `{e}`")));
                }
            }
            if let Some([lo, hi]) = h.y_band {
                if lo > hi {
                    return Err(kerr(&f.item, "y_band is inverted"));
                }
            }
            let is_ore = h.block.as_deref().is_some_and(|b| b.ends_with("_ore"));
            if (is_ore || h.source == Some(Source::Mine)) && f.info_text.trim().is_empty() {
                return Err(kerr(&f.item, "mineable item needs an information text"));
            }
        }
        self.check_acyclic()
    }

    fn check_acyclic(&self) -> Result<()> {
        // 0 = unvisited, 1 = on stack, 2 = done
        let mut state: BTreeMap<&str, u8> = BTreeMap::new();
        fn visit<'a>(
            kb: &'a KnowledgeBase,
            item: &'a str,
            state: &mut BTreeMap<&'a str, u8>,
        ) -> Result<()> {
            match state.get(item) {
                Some(2) => return Ok(()),
                Some(1) => return Err(kerr(item, "recipe cycle")),
                _ => {}
            }
            state.insert(item, 1);
            if let Some(r) = kb.recipes.get(item) {
                for m in r.materials.keys().chain(r.tool.iter()) {
                    visit(kb, m, state)?;
                }
            }
            state.insert(item, 2);
            Ok(())
        }
        for item in self.recipes.keys() {
            visit(self, item, &mut state)?;
        }
        Ok(())
    }

    fn is_known(&self, item: &str) -> bool {
        self.recipes.contains_key(item) || self.facts.contains_key(item)
    }

    /// Canonical item name for a name or alias.
    pub fn canonical<'a>(&'a self, name: &'a str) -> Option<&'a str> {
        let name = name.trim();
        if self.is_known(name) {
            return Some(name);
        }
        self.aliases.get(name).map(String::as_str)
    }

    pub fn items(&self) -> BTreeSet<&str> {
        self.recipes
            .keys()
            .chain(self.facts.keys())
            .map(String::as_str)
            .collect()
    }

    pub fn recipe(&self, item: &str) -> Option<&Recipe> {
        self.canonical(item).and_then(|i| self.recipes.get(i))
    }

    pub fn recipes(&self) -> impl Iterator<Item = &Recipe> {
        self.recipes.values()
    }

    pub fn fact(&self, item: &str) -> Option<&FactEntry> {
        self.canonical(item).and_then(|i| self.facts.get(i))
    }

    pub fn hints(&self, item: &str) -> Option<&Hints> {
        self.fact(item).map(|f| &f.hints)
    }

    /// Block or mob the item is gathered from, if any.
    pub fn target_of(&self, item: &str) -> Option<Target> {
        let h = self.hints(item)?;
        if let Some(b) = h.block.as_deref().and_then(BlockKind::from_name) {
            return Some(Target::Block(b));
        }
        h.entity
            .as_deref()
            .and_then(EntityKind::from_name)
            .map(Target::Entity)
    }

    /// Exact-name lookup; empty when nothing is known.
    pub fn lookup_info(&self, item: &str) -> String {
        let Some(name) = self.canonical(item) else {
            return String::new();
        };
        if let Some(f) = self.facts.get(name) {
            return f.info_text.clone();
        }
        match self.recipes.get(name) {
            Some(r) => describe_recipe(r),
            None => String::new(),
        }
    }

    /// Builds a goal with prerequisites and information filled in.
    pub fn make_goal(&self, object: &str, count: u32) -> Result<Goal> {
        let name = self
            .canonical(object)
            .ok_or_else(|| Error::UnknownItem(object.to_string()))?
            .to_string();
        let (material, tool) = match self.recipes.get(&name) {
            Some(r) => {
                let batches = count.div_ceil(r.output_count);
                let mats = r
                    .materials
                    .iter()
                    .map(|(m, &n)| (m.clone(), n * batches))
                    .collect();
                (Some(mats), r.tool.clone())
            }
            None => {
                let tool = self
                    .hints(&name)
                    .and_then(|h| h.min_tool_tier)
                    .and_then(Tier::pickaxe)
                    .map(str::to_string);
                (None, tool)
            }
        };
        Ok(Goal {
            info: self.lookup_info(&name),
            object: name,
            count,
            material,
            tool,
        })
    }

    /// Block tiers, tool tiers and damage values for the simulator.
    pub fn rules(&self) -> Rules {
        let mut rules = Rules {
            block_tiers: BTreeMap::new(),
            tool_tiers: BTreeMap::new(),
            tool_damage: BTreeMap::new(),
        };
        for f in self.facts.values() {
            let h = &f.hints;
            if let (Some(b), Some(t)) = (h.block.as_deref(), h.min_tool_tier) {
                if let Some(kind) = BlockKind::from_name(b) {
                    rules.block_tiers.insert(kind, t);
                }
            }
            if let Some(t) = h.tool_tier {
                rules.tool_tiers.insert(f.item.clone(), t);
            }
            if let Some(d) = h.damage {
                rules.tool_damage.insert(f.item.clone(), d);
            }
        }
        rules
    }
}

impl InfoRetriever for KnowledgeBase {
    fn retrieve(&self, item: &str) -> String {
        self.lookup_info(item)
    }
}

fn kerr(entry: &str, reason: &str) -> Error {
    Error::Knowledge {
        entry: entry.to_string(),
        reason: reason.to_string(),
    }
}

fn describe_recipe(r: &Recipe) -> String {
    let mats: Vec<String> = r.materials.iter().map(|(m, n)| format!("{n} {m}")).collect();
    let verb = match r.station {
        Station::Craft => "Crafting",
        Station::Smelt => "Smelting",
    };
    let mut s = format!(
        "{verb} {} {} requires {} as the material",
        r.output_count,
        r.output,
        mats.join(" and ")
    );
    if let Some(t) = &r.tool {
        s.push_str(&format!(" and {t} as the tool"));
    }
    s.push('.');
    s
}
