//! Structured actions and their grounding into world primitives.

pub mod astar;
pub mod build;
mod craft;
mod dig;
pub mod explore;
mod gather;
mod nav;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::knowledge::{KnowledgeBase, Target};
use crate::world::{BlockKind, EntityKind, Event, GroundStatus, Observation, Primitive, Sim};

pub use astar::{plan, Move, NavGoal, NavGrid, NoPath, Path};
pub use build::Blueprint;

/// Upper bound on primitives a single action may issue.
pub const STEP_CAP: u64 = 10_000;

pub const ACTION_NAMES: [&str; 11] = [
    "equip", "explore", "approach", "mine", "attack", "dig_down", "go_up", "build", "craft",
    "smelt", "apply",
];

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Action {
    Equip { object: String },
    Explore { object: String, strategy: String },
    Approach { object: String },
    Mine { object: String, tool: Option<String>, count: Option<u32> },
    Attack { object: String, tool: Option<String> },
    DigDown { ylevel: i32 },
    GoUp,
    Build { blueprint: String },
    Craft { object: String, materials: BTreeMap<String, u32>, tool: Option<String>, count: Option<u32> },
    Smelt { object: String, materials: BTreeMap<String, u32>, tool: Option<String>, count: Option<u32> },
    Apply { object: String, tool: String },
}

impl Action {
    pub fn name(&self) -> &'static str {
        match self {
            Action::Equip { .. } => "equip",
            Action::Explore { .. } => "explore",
            Action::Approach { .. } => "approach",
            Action::Mine { .. } => "mine",
            Action::Attack { .. } => "attack",
            Action::DigDown { .. } => "dig_down",
            Action::GoUp => "go_up",
            Action::Build { .. } => "build",
            Action::Craft { .. } => "craft",
            Action::Smelt { .. } => "smelt",
            Action::Apply { .. } => "apply",
        }
    }

    /// Main object argument, used to group actions in memory summaries.
    pub fn object(&self) -> String {
        match self {
            Action::Equip { object }
            | Action::Explore { object, .. }
            | Action::Approach { object }
            | Action::Mine { object, .. }
            | Action::Attack { object, .. }
            | Action::Craft { object, .. }
            | Action::Smelt { object, .. }
            | Action::Apply { object, .. } => object.clone(),
            Action::DigDown { ylevel } => ylevel.to_string(),
            Action::GoUp => String::new(),
            Action::Build { blueprint } => blueprint.clone(),
        }
    }

    pub fn args(&self) -> Value {
        let opt = |o: &Option<String>| o.clone().map(Value::String).unwrap_or(Value::Null);
        match self {
            Action::Equip { object } | Action::Approach { object } => json!({ "object": object }),
            Action::Explore { object, strategy } => json!({ "object": object, "strategy": strategy }),
            Action::Mine { object, tool, count } => {
                let mut v = json!({ "object": object, "tool": opt(tool) });
                if let Some(c) = count {
                    v["count"] = json!(c);
                }
                v
            }
            Action::Attack { object, tool } => json!({ "object": object, "tool": opt(tool) }),
            Action::DigDown { ylevel } => json!({ "ylevel": ylevel }),
            Action::GoUp => json!({}),
            Action::Build { blueprint } => json!({ "blueprint": blueprint }),
            Action::Craft { object, materials, tool, count }
            | Action::Smelt { object, materials, tool, count } => {
                let mut v = json!({ "object": object, "materials": materials, "tool": opt(tool) });
                if let Some(c) = count {
                    v["count"] = json!(c);
                }
                v
            }
            Action::Apply { object, tool } => json!({ "object": object, "tool": tool }),
        }
    }
}

/// An action plus the planner's stated expectation of its outcome.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Value", into = "Value")]
pub struct StructuredAction {
    pub action: Action,
    pub expectation: String,
}

impl StructuredAction {
    pub fn new(action: Action) -> Self {
        StructuredAction {
            action,
            expectation: String::new(),
        }
    }

    pub fn expecting(mut self, text: impl Into<String>) -> Self {
        self.expectation = text.into();
        self
    }

    pub fn name(&self) -> &'static str {
        self.action.name()
    }

    pub fn to_value(&self) -> Value {
        json!({
            "name": self.action.name(),
            "args": self.action.args(),
            "expectation": self.expectation,
        })
    }

    /// Parses `{"name", "args", "expectation"}`. Errors describe the problem
    /// in words suitable for feeding back to a planner.
    pub fn from_value(v: &Value) -> Result<Self, String> {
        let obj = v.as_object().ok_or("each action must be a JSON object")?;
        let raw_name = obj
            .get("name")
            .and_then(Value::as_str)
            .ok_or("action is missing a string `name`")?;
        let name = normalize_name(raw_name);
        let empty = Map::new();
        let args = match obj.get("args") {
            None | Some(Value::Null) => &empty,
            Some(Value::Object(m)) => m,
            Some(_) => return Err(format!("args of `{raw_name}` must be an object")),
        };
        let expectation = obj
            .get("expectation")
            .and_then(Value::as_str)
            .unwrap_or_default()
            .to_string();
        let action = parse_args(&name, raw_name, args)?;
        Ok(StructuredAction {
            action,
            expectation,
        })
    }
}

impl From<StructuredAction> for Value {
    fn from(a: StructuredAction) -> Value {
        a.to_value()
    }
}

impl TryFrom<Value> for StructuredAction {
    type Error = String;
    fn try_from(v: Value) -> Result<Self, String> {
        StructuredAction::from_value(&v)
    }
}

impl fmt::Display for StructuredAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.action.name(), self.action.args())
    }
}

fn normalize_name(raw: &str) -> String {
    let n = raw.trim().to_ascii_lowercase().replace([' ', '-'], "_");
    match n.as_str() {
        "digdown" => "dig_down".into(),
        "goup" | "go_back_to_ground" | "go_back_to_the_ground" => "go_up".into(),
        _ => n,
    }
}

fn str_arg(args: &Map<String, Value>, key: &str) -> Option<String> {
    match args.get(key)? {
        Value::String(s) if !s.trim().is_empty() && s.trim() != "null" && s.trim() != "none" => {
            Some(s.trim().to_string())
        }
        _ => None,
    }
}

fn u32_arg(args: &Map<String, Value>, key: &str) -> Option<u32> {
    match args.get(key)? {
        Value::Number(n) => n.as_u64().map(|v| v as u32),
        Value::String(s) => s.trim().parse().ok(),
        _ => None,
    }
}

fn materials_arg(args: &Map<String, Value>) -> BTreeMap<String, u32> {
    let mut out = BTreeMap::new();
    match args.get("materials") {
        Some(Value::Object(m)) => {
            for (k, v) in m {
                let n = v.as_u64().or_else(|| v.as_str().and_then(|s| s.parse().ok()));
                out.insert(k.clone(), n.unwrap_or(1) as u32);
            }
        }
        Some(Value::Array(items)) => {
            for it in items {
                if let Some(s) = it.as_str() {
                    out.insert(s.to_string(), 1);
                }
            }
        }
        _ => {}
    }
    out
}

fn parse_args(name: &str, raw: &str, args: &Map<String, Value>) -> Result<Action, String> {
    let object = || str_arg(args, "object").ok_or_else(|| format!("`{raw}` needs an `object` argument"));
    Ok(match name {
        "equip" => Action::Equip { object: object()? },
        "explore" => Action::Explore {
            object: object()?,
            strategy: str_arg(args, "strategy").unwrap_or_default(),
        },
        "approach" => Action::Approach { object: object()? },
        "mine" => Action::Mine {
            object: object()?,
            tool: str_arg(args, "tool"),
            count: u32_arg(args, "count"),
        },
        "attack" => Action::Attack {
            object: object()?,
            tool: str_arg(args, "tool"),
        },
        "dig_down" => {
            let y = ["ylevel", "y_level", "y", "object"].iter().find_map(|k| match args.get(*k)? {
                Value::Number(n) => n.as_i64(),
                Value::String(s) => s.trim().parse().ok(),
                _ => None,
            });
            Action::DigDown {
                ylevel: y.ok_or("`dig_down` needs an integer `ylevel` argument")? as i32,
            }
        }
        "go_up" => Action::GoUp,
        "build" => Action::Build {
            blueprint: str_arg(args, "blueprint")
                .or_else(|| str_arg(args, "object"))
                .ok_or("`build` needs a `blueprint` argument")?,
        },
        "craft" | "smelt" => {
            // `object` may be a name or a single-entry `{name: quantity}` map
            let (object, dict_count) = match args.get("object") {
                Some(Value::Object(m)) if m.len() == 1 => {
                    let (k, v) = m.iter().next().expect("one entry");
                    let n = v.as_u64().or_else(|| v.as_str().and_then(|s| s.trim().parse().ok()));
                    match n {
                        Some(n) if n > 0 => (k.trim().to_string(), Some(n as u32)),
                        _ => return Err(format!("quantity of `{k}` in `{raw}` must be a positive integer")),
                    }
                }
                Some(Value::Object(_)) => return Err(format!("`{raw}` takes exactly one object")),
                _ => (object()?, None),
            };
            if object.is_empty() {
                return Err(format!("`{raw}` needs an `object` argument"));
            }
            let materials = materials_arg(args);
            let tool = str_arg(args, "tool").or_else(|| str_arg(args, "platform"));
            let count = u32_arg(args, "count").or(dict_count);
            if name == "craft" {
                Action::Craft { object, materials, tool, count }
            } else {
                Action::Smelt { object, materials, tool, count }
            }
        }
        "apply" => Action::Apply {
            object: object()?,
            tool: str_arg(args, "tool").ok_or("`apply` needs a `tool` argument")?,
        },
        _ => {
            return Err(format!(
                "unknown action `{raw}`; valid actions are {}",
                ACTION_NAMES.join(", ")
            ))
        }
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureReason {
    NotInInventory,
    NotVisible,
    NoPath,
    OutOfReach,
    InsufficientMaterials,
    InsufficientToolTier,
    StepCapExceeded,
    InvalidPlacement,
    ApiFailure,
}

impl FailureReason {
    pub fn as_str(self) -> &'static str {
        match self {
            FailureReason::NotInInventory => "not_in_inventory",
            FailureReason::NotVisible => "not_visible",
            FailureReason::NoPath => "no_path",
            FailureReason::OutOfReach => "out_of_reach",
            FailureReason::InsufficientMaterials => "insufficient_materials",
            FailureReason::InsufficientToolTier => "insufficient_tool_tier",
            FailureReason::StepCapExceeded => "step_cap_exceeded",
            FailureReason::InvalidPlacement => "invalid_placement",
            FailureReason::ApiFailure => "api_failure",
        }
    }
}

impl fmt::Display for FailureReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Success,
    Failure,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateSummary {
    pub inventory: BTreeMap<String, u32>,
    pub biome: String,
    pub y_level: i32,
    pub ground_status: GroundStatus,
}

impl StateSummary {
    pub fn of(sim: &Sim) -> Self {
        StateSummary {
            inventory: sim.agent.inventory.clone(),
            biome: sim.biome(),
            y_level: sim.agent.feet().y,
            ground_status: sim.agent.ground_status,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionResult {
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<FailureReason>,
    pub message: String,
    pub inventory_delta: BTreeMap<String, i64>,
    pub state: StateSummary,
    /// Primitive ticks consumed.
    pub steps: u64,
}

impl ActionResult {
    pub fn succeeded(&self) -> bool {
        self.status == Status::Success
    }
}

/// Failure raised inside an action implementation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct Fail {
    pub reason: FailureReason,
    pub message: String,
}

pub(crate) fn fail<T>(reason: FailureReason, message: impl Into<String>) -> Result<T, Fail> {
    Err(Fail {
        reason,
        message: message.into(),
    })
}

type Outcome = Result<String, Fail>;

/// Per-action execution context: the simulator, the knowledge base and the
/// primitive budget for this action.
pub(crate) struct Ctx<'a> {
    pub sim: &'a mut Sim,
    pub kb: &'a KnowledgeBase,
    start_tick: u64,
    cap: u64,
}

impl<'a> Ctx<'a> {
    pub fn new(sim: &'a mut Sim, kb: &'a KnowledgeBase) -> Self {
        let start_tick = sim.world.tick_count;
        let cap = STEP_CAP.min(sim.ticks_left());
        Ctx {
            sim,
            kb,
            start_tick,
            cap,
        }
    }

    pub fn used(&self) -> u64 {
        self.sim.world.tick_count - self.start_tick
    }

    fn check_budget(&self) -> Result<(), Fail> {
        if self.used() >= self.cap {
            return fail(
                FailureReason::StepCapExceeded,
                format!("gave up after {} steps", self.used()),
            );
        }
        Ok(())
    }

    pub fn step(&mut self, p: Primitive) -> Result<Vec<Event>, Fail> {
        self.check_budget()?;
        self.sim.step(p).map_err(|_| Fail {
            reason: FailureReason::StepCapExceeded,
            message: "the episode ran out of steps".into(),
        })
    }

    pub fn idle(&mut self) -> Result<(), Fail> {
        self.check_budget()?;
        self.sim.idle().map(|_| ()).map_err(|_| Fail {
            reason: FailureReason::StepCapExceeded,
            message: "the episode ran out of steps".into(),
        })
    }

    pub fn observe(&self) -> Observation {
        self.sim.observe()
    }

    /// Turns to an absolute yaw/pitch, skipping the tick when already there.
    pub fn face(&mut self, yaw: f64, pitch: f64) -> Result<(), Fail> {
        let a = &self.sim.agent;
        let dyaw = (yaw - a.yaw + 180.0).rem_euclid(360.0) - 180.0;
        let dpitch = pitch - a.pitch;
        if dyaw.abs() < 1e-9 && dpitch.abs() < 1e-9 {
            return Ok(());
        }
        self.step(Primitive::Turn { dyaw, dpitch })?;
        Ok(())
    }

    pub fn equip(&mut self, item: &str) -> Result<(), Fail> {
        if self.sim.agent.equipped.as_deref() == Some(item) {
            return Ok(());
        }
        if self.sim.agent.count(item) == 0 {
            return fail(FailureReason::NotInInventory, format!("{item} is not in the inventory"));
        }
        self.step(Primitive::Select { item: item.into() })?;
        Ok(())
    }

    /// Resolves an object argument to what the agent should look for.
    pub fn target(&self, object: &str) -> Option<Target> {
        if let Some(t) = self.kb.target_of(object) {
            return Some(t);
        }
        if let Some(b) = BlockKind::from_name(object) {
            return Some(Target::Block(b));
        }
        if let Some(e) = EntityKind::from_name(object) {
            return Some(Target::Entity(e));
        }
        let singular = object.strip_suffix('s')?;
        self.target(singular)
    }
}

/// Runs one structured action to completion or failure.
pub fn execute(sim: &mut Sim, kb: &KnowledgeBase, action: &StructuredAction) -> ActionResult {
    let before = sim.agent.inventory.clone();
    let start = sim.world.tick_count;
    let outcome: Outcome = {
        let mut ctx = Ctx::new(sim, kb);
        run(&mut ctx, &action.action)
    };
    let after = &sim.agent.inventory;
    let mut delta = BTreeMap::new();
    for k in before.keys().chain(after.keys()) {
        let d = *after.get(k).unwrap_or(&0) as i64 - *before.get(k).unwrap_or(&0) as i64;
        if d != 0 {
            delta.insert(k.clone(), d);
        }
    }
    let (status, reason, message) = match outcome {
        Ok(m) => (Status::Success, None, m),
        Err(f) => (Status::Failure, Some(f.reason), f.message),
    };
    ActionResult {
        status,
        reason,
        message,
        inventory_delta: delta,
        state: StateSummary::of(sim),
        steps: sim.world.tick_count - start,
    }
}

fn run(ctx: &mut Ctx, action: &Action) -> Outcome {
    match action {
        Action::Equip { object } => {
            let item = ctx.kb.canonical(object).unwrap_or(object).to_string();
            ctx.equip(&item)?;
            Ok(format!("equipped {item}"))
        }
        Action::Explore { object, strategy } => explore::explore(ctx, object, strategy),
        Action::Approach { object } => nav::approach(ctx, object),
        Action::Mine { object, tool, count } => gather::mine(ctx, object, tool.as_deref(), *count),
        Action::Attack { object, tool } => gather::attack(ctx, object, tool.as_deref()),
        Action::DigDown { ylevel } => dig::dig_down(ctx, *ylevel),
        Action::GoUp => dig::go_up(ctx),
        Action::Build { blueprint } => build::build(ctx, blueprint),
        Action::Craft { object, materials, tool, count } => {
            craft::transform(ctx, crate::knowledge::Station::Craft, object, materials, tool.as_deref(), *count)
        }
        Action::Smelt { object, materials, tool, count } => {
            craft::transform(ctx, crate::knowledge::Station::Smelt, object, materials, tool.as_deref(), *count)
        }
        Action::Apply { object, tool } => gather::apply(ctx, object, tool),
    }
}
