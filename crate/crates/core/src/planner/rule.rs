//! A deterministic planner that stands in for a language model.
//!
//! It reads only what a query carries: the goal, the stated inventory and
//! environment, the last feedback and the reference plan. Ore depths come
//! from the goal's information text. Without a reference plan it commits to
//! at most one gather cycle per response and asks again; a reference plan is
//! replayed whole. Missing tools are never planned for, since tools arrive as
//! sub-goals of their own.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use regex::Regex;

use crate::actions::{Action, FailureReason, StateSummary, Status, StructuredAction};
use crate::error::Result;
use crate::knowledge::{Goal, KnowledgeBase, Source, Station};
use crate::world::{GroundStatus, Tier};

use super::parse::{render_response, PlanResponse};
use super::{PlanProvider, PlanRequest, QueryContext};

/// Levels dug below the current one when the depth of an ore is unknown.
const BLIND_DIG: i32 = 10;
/// Levels dug when a tunnel search at the current level runs dry.
const LEVEL_SHIFT: i32 = 3;

#[derive(Clone, Copy, Debug)]
pub struct RulePlanner<'a> {
    kb: &'a KnowledgeBase,
}

impl<'a> RulePlanner<'a> {
    pub fn new(kb: &'a KnowledgeBase) -> Self {
        RulePlanner { kb }
    }

    /// Structured plan for a query.
    pub fn plan(&self, ctx: &QueryContext) -> PlanResponse {
        let p = Planning { kb: self.kb, goal: &ctx.goal, state: &ctx.state };
        match (&ctx.feedback, &ctx.reference_plan) {
            (None, Some(r)) if !r.is_empty() => p.replay(r),
            (None, _) => p.fresh(None),
            (Some(f), _) => match (f.outcome, f.reason, &f.action) {
                (Status::Success, _, _) | (_, _, None) => p.fresh(None),
                (Status::Failure, Some(reason), Some(a)) => p.react(reason, a),
                (Status::Failure, None, Some(a)) => p.fresh(Some(format!("{} failed", a.name()))),
            },
        }
    }
}

impl PlanProvider for RulePlanner<'_> {
    fn name(&self) -> &str {
        "rule"
    }

    fn complete(&self, req: &PlanRequest) -> Result<String> {
        Ok(render_response(&self.plan(req.context)))
    }
}

/// Depth advice read from an information text.
pub fn level_hint(info: &str) -> Option<i32> {
    static RANGE: OnceLock<Regex> = OnceLock::new();
    static BELOW: OnceLock<Regex> = OnceLock::new();
    static SINGLE: OnceLock<Regex> = OnceLock::new();
    let range = RANGE.get_or_init(|| Regex::new(r"levels?\s+(\d+)\s*(?:~|-|to)\s*(\d+)").expect("regex"));
    let below = BELOW.get_or_init(|| Regex::new(r"levels?\s+(\d+)\s+and\s+below").expect("regex"));
    let single = SINGLE.get_or_init(|| Regex::new(r"levels?\s+(\d+)").expect("regex"));
    if let Some(c) = range.captures(info) {
        let (a, b): (i32, i32) = (c[1].parse().ok()?, c[2].parse().ok()?);
        return Some((a + b) / 2);
    }
    if let Some(c) = below.captures(info) {
        return Some(c[1].parse::<i32>().ok()? - 2);
    }
    single.captures(info).and_then(|c| c[1].parse().ok())
}

struct Planning<'p> {
    kb: &'p KnowledgeBase,
    goal: &'p Goal,
    state: &'p StateSummary,
}

enum Kind<'k> {
    Made(&'k crate::knowledge::Recipe),
    Block(String),
    Mob(String),
    Unknown,
}

fn act(a: Action, expect: impl Into<String>) -> StructuredAction {
    StructuredAction::new(a).expecting(expect)
}

fn respond(explanation: Option<String>, thoughts: impl Into<String>, list: Vec<StructuredAction>) -> PlanResponse {
    PlanResponse {
        explanation,
        thoughts: thoughts.into(),
        action_list: list,
    }
}

impl<'p> Planning<'p> {
    fn have(&self, item: &str) -> u32 {
        self.state.inventory.get(item).copied().unwrap_or(0)
    }

    fn underground(&self) -> bool {
        self.state.ground_status == GroundStatus::Underground
    }

    fn kind(&self, item: &str) -> Kind<'p> {
        if let Some(r) = self.kb.recipe(item) {
            return Kind::Made(r);
        }
        let Some(h) = self.kb.hints(item) else {
            return Kind::Unknown;
        };
        match (h.source, &h.block, &h.entity) {
            (Some(Source::Mob), _, Some(e)) => Kind::Mob(e.clone()),
            (_, Some(b), _) => Kind::Block(b.clone()),
            (_, _, Some(e)) => Kind::Mob(e.clone()),
            _ => Kind::Unknown,
        }
    }

    /// The item a block drops, when the block is a known source.
    fn item_of_block(&self, block: &str) -> Option<String> {
        self.kb
            .items()
            .into_iter()
            .find(|i| self.kb.hints(i).and_then(|h| h.block.as_deref()) == Some(block))
            .map(str::to_string)
    }

    fn tier_of(&self, item: &str) -> Tier {
        self.kb.hints(item).and_then(|h| h.tool_tier).unwrap_or(Tier::Hand)
    }

    /// The tool to name for a gather step, or Err when nothing suitable is held.
    fn tool_for(&self, item: &str) -> std::result::Result<Option<String>, String> {
        let needed = self.kb.hints(item).and_then(|h| h.min_tool_tier).unwrap_or(Tier::Hand);
        if needed == Tier::Hand {
            return Ok(None);
        }
        if let Some(t) = &self.goal.tool {
            if self.goal.object == item && self.have(t) > 0 {
                return Ok(Some(t.clone()));
            }
        }
        self.state
            .inventory
            .iter()
            .filter(|(i, &n)| n > 0 && self.tier_of(i) >= needed)
            .min_by_key(|(i, _)| (self.tier_of(i), i.as_str()))
            .map(|(i, _)| Some(i.clone()))
            .ok_or_else(|| format!("{item} needs a {} or better, which I do not have", needed.pickaxe().unwrap_or("tool")))
    }

    fn best_weapon(&self) -> Option<String> {
        self.state
            .inventory
            .keys()
            .filter_map(|i| self.kb.hints(i).and_then(|h| h.damage).map(|d| (d, i)))
            .max()
            .map(|(_, i)| i.clone())
    }

    fn default_strategy(&self) -> &'static str {
        if self.underground() {
            "dfs"
        } else {
            "bfs"
        }
    }

    /// Information text of `item`, taken from the goal when it is the goal.
    fn info(&self, item: &str) -> String {
        if item == self.goal.object {
            self.goal.info.clone()
        } else if self.goal.info.is_empty() {
            String::new()
        } else {
            self.kb.lookup_info(item)
        }
    }

    /// One explore, approach, collect cycle for a world resource.
    fn gather_cycle(&self, item: &str, strategy: Option<&str>) -> std::result::Result<Vec<StructuredAction>, String> {
        let mut out = Vec::new();
        match self.kind(item) {
            Kind::Block(block) => {
                let tool = self.tool_for(item)?;
                let level = level_hint(&self.info(item));
                let needs_pick = tool.is_some();
                let strategy = match (level, strategy) {
                    (None, _) if !needs_pick && self.underground() => {
                        out.push(act(Action::GoUp, "back on the ground"));
                        "bfs".into()
                    }
                    (_, Some(s)) => s.to_string(),
                    (Some(y), None) if y < self.state.y_level - 1 || self.underground() => {
                        if y < self.state.y_level - 1 {
                            out.push(act(Action::DigDown { ylevel: y }, format!("reach level {y}")));
                        }
                        "dfs".into()
                    }
                    _ => self.default_strategy().into(),
                };
                out.push(act(
                    Action::Explore { object: block.clone(), strategy },
                    format!("{block} is visible"),
                ));
                out.push(act(Action::Approach { object: block.clone() }, format!("next to the {block}")));
                out.push(act(
                    Action::Mine { object: block.clone(), tool, count: None },
                    format!("one more {item}"),
                ));
            }
            Kind::Mob(mob) => {
                if self.underground() {
                    out.push(act(Action::GoUp, "back on the ground"));
                }
                out.push(act(
                    Action::Explore { object: mob.clone(), strategy: strategy.unwrap_or("bfs").into() },
                    format!("a {mob} is visible"),
                ));
                out.push(act(Action::Approach { object: mob.clone() }, format!("next to the {mob}")));
                out.push(act(
                    Action::Attack { object: mob.clone(), tool: self.best_weapon() },
                    format!("{item} dropped and collected"),
                ));
            }
            Kind::Made(_) | Kind::Unknown => return Err(format!("I do not know where to find {item}")),
        }
        Ok(out)
    }

    fn craft_action(&self, r: &crate::knowledge::Recipe, want: u32) -> StructuredAction {
        let batches = want.div_ceil(r.output_count).max(1);
        let materials: BTreeMap<String, u32> = r.materials.iter().map(|(m, n)| (m.clone(), n * batches)).collect();
        let (object, tool, count) = (r.output.clone(), r.tool.clone(), Some(want));
        let a = match r.station {
            Station::Craft => Action::Craft { object, materials, tool, count },
            Station::Smelt => Action::Smelt { object, materials, tool, count },
        };
        act(a, format!("{want} {} in the inventory", r.output))
    }

    fn missing(&self) -> u32 {
        self.goal.count.saturating_sub(self.have(&self.goal.object)).max(1)
    }

    /// Canonical plan from the stated state.
    fn fresh(&self, explanation: Option<String>) -> PlanResponse {
        let object = &self.goal.object;
        match self.kind(object) {
            Kind::Made(r) => {
                if let Some(t) = &r.tool {
                    if self.have(t) == 0 {
                        return respond(explanation, format!("{object} needs {t}, which I do not have"), vec![]);
                    }
                }
                respond(explanation, format!("{object} is made from its materials"), vec![self.craft_action(r, self.missing())])
            }
            Kind::Block(_) | Kind::Mob(_) => match self.gather_cycle(object, None) {
                Ok(list) => respond(explanation, format!("find and collect one {object}"), list),
                Err(why) => respond(explanation, why, vec![]),
            },
            Kind::Unknown => respond(explanation, format!("I do not know how to get {object}"), vec![]),
        }
    }

    /// Replays a reference plan, dropping steps that do not fit the state.
    fn replay(&self, reference: &[StructuredAction]) -> PlanResponse {
        let mut y = self.state.y_level;
        let mut under = self.underground();
        let mut out = Vec::new();
        for a in reference {
            match &a.action {
                Action::DigDown { ylevel } => {
                    if *ylevel >= y {
                        continue;
                    }
                    y = *ylevel;
                    under = true;
                }
                Action::GoUp => {
                    if !under {
                        continue;
                    }
                    under = false;
                }
                Action::Explore { strategy, .. } if under && strategy == "bfs" => {
                    out.push(act(Action::GoUp, "back on the ground"));
                    under = false;
                }
                Action::Explore { strategy, .. } if !under && strategy == "dfs" => {
                    if let Some(level) = level_hint(&self.info(&self.goal.object)).filter(|l| *l < y - 1) {
                        out.push(act(Action::DigDown { ylevel: level }, format!("reach level {level}")));
                        y = level;
                        under = true;
                    }
                }
                Action::Mine { object, count, .. } => {
                    let tool = match self.item_of_block(object).map(|i| self.tool_for(&i)) {
                        Some(Ok(t)) => t,
                        _ => None,
                    };
                    out.push(act(Action::Mine { object: object.clone(), tool, count: *count }, a.expectation.clone()));
                    continue;
                }
                _ => {}
            }
            out.push(a.clone());
        }
        if out.is_empty() {
            return self.fresh(None);
        }
        self.complete_tail(&mut out, under);
        respond(None, format!("follow the reference plan for {}", self.goal.object), out)
    }

    /// Appends the collecting steps a gather plan stops short of.
    fn complete_tail(&self, out: &mut Vec<StructuredAction>, under: bool) {
        let Kind::Block(block) = self.kind(&self.goal.object) else {
            return;
        };
        let strategy = if under { "dfs" } else { "bfs" };
        let tail = self.cycle_tail(&block, strategy);
        let skip = match out.last().map(|a| &a.action) {
            Some(Action::Mine { object, .. }) if *object == block => return,
            Some(Action::Approach { object }) if *object == block => 2,
            Some(Action::Explore { object, .. }) if *object == block => 1,
            _ => 0,
        };
        out.extend(tail.into_iter().skip(skip));
    }

    /// Reaction to a failed action.
    fn react(&self, reason: FailureReason, failed: &StructuredAction) -> PlanResponse {
        let why = Some(format!("{} failed with {reason}", failed.name()));
        let object = self.goal.object.clone();
        match (reason, &failed.action) {
            (FailureReason::InsufficientMaterials, Action::Craft { .. } | Action::Smelt { .. }) => self.repair(why),
            (FailureReason::NotVisible, Action::Explore { strategy, .. }) => self.retry_explore(why, Some(strategy)),
            (FailureReason::NotVisible, Action::Mine { object: o, .. } | Action::Approach { object: o })
                if self.underground() && self.tool_for(&object).ok().flatten().is_some() =>
            {
                let y = (self.state.y_level - LEVEL_SHIFT).max(2);
                let mut list = vec![act(Action::DigDown { ylevel: y }, format!("reach level {y}"))];
                list.extend(self.cycle_tail(o, "dfs"));
                respond(why, format!("the {o} in sight cannot be reached, search a lower level"), list)
            }
            (FailureReason::NotVisible, _) => self.retry_explore(why, None),
            (FailureReason::StepCapExceeded, Action::Explore { object: o, strategy }) => {
                let level = level_hint(&self.info(&object));
                let needs_pick = self.tool_for(&object).ok().flatten().is_some();
                if self.state.ground_status == GroundStatus::OnGround && level.is_none() && needs_pick {
                    // not found on the surface: search deeper
                    let y = (self.state.y_level - BLIND_DIG).max(2);
                    let mut list = vec![act(Action::DigDown { ylevel: y }, format!("reach level {y}"))];
                    list.extend(self.cycle_tail(o, "dfs"));
                    return respond(why, format!("{object} is not on the surface, dig down and search"), list);
                }
                if self.underground() && needs_pick {
                    let y = (self.state.y_level - LEVEL_SHIFT).max(2);
                    let mut list = vec![act(Action::DigDown { ylevel: y }, format!("reach level {y}"))];
                    list.extend(self.cycle_tail(o, "dfs"));
                    return respond(why, format!("search for {object} on a lower level"), list);
                }
                self.retry_explore(why, Some(strategy))
            }
            (FailureReason::NoPath, Action::Approach { object: o }) => {
                let list = match self.item_of_block(o) {
                    Some(item) => vec![act(
                        Action::Mine { object: o.clone(), tool: self.tool_for(&item).ok().flatten(), count: None },
                        format!("collect the {o} from here"),
                    )],
                    None => vec![act(Action::Attack { object: o.clone(), tool: self.best_weapon() }, "kill it")],
                };
                respond(why, "the target cannot be walked to, try from here", list)
            }
            (FailureReason::OutOfReach | FailureReason::NoPath, _) => {
                if self.underground() {
                    let y = self.state.y_level - 1;
                    let mut list = vec![act(Action::DigDown { ylevel: y }, "a fresh tunnel level")];
                    if let Ok(c) = self.gather_cycle(&object, Some("dfs")) {
                        list.extend(c.into_iter().filter(|a| a.name() != "dig_down"));
                    }
                    return respond(why, "move to a new spot and search again", list);
                }
                self.retry_explore(why, Some("bfs"))
            }
            (FailureReason::InsufficientToolTier | FailureReason::NotInInventory, _) => self.fresh(why),
            _ => self.fresh(why),
        }
    }

    fn cycle_tail(&self, block: &str, strategy: &str) -> Vec<StructuredAction> {
        let tool = self.tool_for(&self.goal.object).ok().flatten();
        vec![
            act(Action::Explore { object: block.into(), strategy: strategy.into() }, format!("{block} is visible")),
            act(Action::Approach { object: block.into() }, format!("next to the {block}")),
            act(Action::Mine { object: block.into(), tool, count: None }, format!("one more {}", self.goal.object)),
        ]
    }

    fn retry_explore(&self, why: Option<String>, strategy: Option<&str>) -> PlanResponse {
        let object = &self.goal.object;
        match self.kind(object) {
            Kind::Block(_) | Kind::Mob(_) => {
                let strategy = strategy.filter(|s| !s.is_empty());
                match self.gather_cycle(object, strategy) {
                    Ok(list) => respond(why, format!("search for {object} again"), list),
                    Err(e) => respond(why, e, vec![]),
                }
            }
            _ => self.fresh(why),
        }
    }

    /// Gathers or crafts the first missing material, then retries the craft.
    fn repair(&self, why: Option<String>) -> PlanResponse {
        let object = &self.goal.object;
        let Kind::Made(r) = self.kind(object) else {
            return self.fresh(why);
        };
        let want = self.missing();
        let batches = want.div_ceil(r.output_count).max(1);
        let mut list = Vec::new();
        for (m, per) in &r.materials {
            let need = per * batches;
            let short = need.saturating_sub(self.have(m));
            if short == 0 {
                continue;
            }
            match self.kind(m) {
                Kind::Block(_) | Kind::Mob(_) => match self.gather_cycle(m, None) {
                    Ok(c) => list.extend(c),
                    Err(e) => return respond(why, e, vec![]),
                },
                Kind::Made(sub) => {
                    if let Some(t) = &sub.tool {
                        if self.have(t) == 0 {
                            return respond(why, format!("{m} needs {t}, which I do not have"), vec![]);
                        }
                    }
                    let sub_batches = short.div_ceil(sub.output_count);
                    for (sm, sper) in &sub.materials {
                        if self.have(sm) < sper * sub_batches {
                            match self.gather_cycle(sm, None) {
                                Ok(c) => list.extend(c),
                                Err(e) => return respond(why, e, vec![]),
                            }
                        }
                    }
                    list.push(self.craft_action(sub, short));
                }
                Kind::Unknown => return respond(why, format!("I do not know how to get {m}"), vec![]),
            }
            break;
        }
        list.push(self.craft_action(r, want));
        respond(why, format!("get the missing materials for {object} first"), list)
    }
}
