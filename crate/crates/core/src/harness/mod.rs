//! Episodes, suites, warmup and ablation switches.

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::actions::StateSummary;
use crate::decomposer::{decompose, flat, schedule};
use crate::error::{Error, Result};
use crate::knowledge::{Goal, KnowledgeBase};
use crate::memory::{goal_key, ActionSequence, MemoryStore};
use crate::planner::{run_subgoal, Limits, PlanEnv, PlanProvider, Record, SubgoalOutcome, SubgoalReport, Transcript};
use crate::world::{Sim, WorldConfig};

pub const DEFAULT_TICK_LIMIT: u64 = 12_000;
/// First seed of the default suite battery.
pub const SUITE_SEED: u64 = 1000;
/// Games per tier when escalating.
pub const TIERS: [u32; 4] = [20, 50, 100, 200];
pub const DIAMOND_MILESTONES: [&str; 5] = ["crafting_table", "wooden_pickaxe", "stone_pickaxe", "iron_pickaxe", "diamond"];

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Ablations {
    #[serde(default)]
    pub no_decompose: bool,
    #[serde(default)]
    pub no_feedback: bool,
    #[serde(default)]
    pub no_info: bool,
    #[serde(default)]
    pub no_memory: bool,
}

impl Ablations {
    /// Rows of the ablation table, each removing one more component.
    pub fn ladder() -> [(&'static str, Ablations); 5] {
        let a = Ablations::default();
        let m = Ablations { no_memory: true, ..a };
        let i = Ablations { no_info: true, ..m };
        let f = Ablations { no_feedback: true, ..i };
        let d = Ablations { no_decompose: true, ..f };
        [("full", a), ("no_memory", m), ("no_info", i), ("no_feedback", f), ("no_decompose", d)]
    }

    pub fn tag(&self) -> String {
        let mut parts = Vec::new();
        for (on, name) in [
            (self.no_decompose, "nodecomp"),
            (self.no_feedback, "nofeedback"),
            (self.no_info, "noinfo"),
            (self.no_memory, "nomemory"),
        ] {
            if on {
                parts.push(name);
            }
        }
        if parts.is_empty() {
            "full".into()
        } else {
            parts.join("-")
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TaskSpec {
    pub target: String,
    #[serde(default = "one")]
    pub count: u32,
    #[serde(default = "default_ticks")]
    pub tick_limit: u64,
    #[serde(default = "default_queries")]
    pub query_limit: u32,
    #[serde(default)]
    pub ablations: Ablations,
}

fn one() -> u32 {
    1
}
fn default_ticks() -> u64 {
    DEFAULT_TICK_LIMIT
}
fn default_queries() -> u32 {
    crate::planner::MAX_QUERIES
}

impl TaskSpec {
    pub fn new(target: impl Into<String>, count: u32) -> Self {
        TaskSpec {
            target: target.into(),
            count,
            tick_limit: DEFAULT_TICK_LIMIT,
            query_limit: crate::planner::MAX_QUERIES,
            ablations: Ablations::default(),
        }
    }

    pub fn with_ablations(mut self, a: Ablations) -> Self {
        self.ablations = a;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, reason: &str| {
            Err(Error::Config {
                field: field.into(),
                reason: reason.into(),
            })
        };
        if self.count == 0 {
            return bad("count", "must be at least 1");
        }
        if self.tick_limit == 0 {
            return bad("tick_limit", "must be positive");
        }
        if self.query_limit == 0 {
            return bad("query_limit", "must be positive");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubgoalLine {
    pub object: String,
    pub count: u32,
    pub outcome: SubgoalOutcome,
    pub queries: u32,
    pub skipped: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpisodeReport {
    pub task: TaskSpec,
    pub seed: u64,
    pub success: bool,
    pub ticks_used: u64,
    pub queries_used: u32,
    /// First time each item entered the inventory.
    pub milestones: Vec<(String, u64)>,
    pub subgoals: Vec<SubgoalLine>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub transcript: Option<String>,
    /// Set when the provider could not be reached; such episodes are not
    /// counted as failures.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub infrastructure_error: Option<String>,
}

impl EpisodeReport {
    pub fn milestone_tick(&self, item: &str) -> Option<u64> {
        self.milestones.iter().find(|(i, _)| i == item).map(|(_, t)| *t)
    }
}

/// Episode settings that are not part of the task.
#[derive(Clone, Debug, Default)]
pub struct EpisodeOptions {
    /// Directory for JSON-lines transcripts; none are written when unset.
    pub transcript_dir: Option<PathBuf>,
    /// Overrides the world generated from the seed.
    pub world: Option<WorldConfig>,
}

/// The sub-goal list for a task.
pub fn plan_schedule(kb: &KnowledgeBase, task: &TaskSpec) -> Result<Vec<Goal>> {
    let tree = if task.ablations.no_decompose {
        flat(kb, &task.target, task.count)?
    } else {
        decompose(kb, &task.target, task.count)?
    };
    let goals = schedule(&tree);
    Ok(if task.ablations.no_info {
        goals.into_iter().map(Goal::without_info).collect()
    } else {
        goals
    })
}

fn milestones_from(records: &[Record]) -> Vec<(String, u64)> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    let mut tick = 0;
    for r in records {
        if let Record::Execution { result, .. } = r {
            tick += result.steps;
            for (item, &n) in &result.state.inventory {
                if n > 0 && seen.insert(item.clone()) {
                    out.push((item.clone(), tick));
                }
            }
        }
    }
    out
}

struct EpisodeRun {
    report: EpisodeReport,
    subgoals: Vec<SubgoalReport>,
}

fn episode(
    kb: &KnowledgeBase,
    task: &TaskSpec,
    seed: u64,
    provider: &dyn PlanProvider,
    memory: Option<&MemoryStore>,
    opts: &EpisodeOptions,
) -> Result<EpisodeRun> {
    task.validate()?;
    let goals = plan_schedule(kb, task)?;
    let config = match &opts.world {
        Some(w) => WorldConfig { seed, ..w.clone() },
        None => WorldConfig::with_seed(seed),
    };
    let mut sim = Sim::spawn(&config, task.tick_limit)?;
    let path = opts
        .transcript_dir
        .as_ref()
        .map(|d| d.join(format!("{}_{}_{}.jsonl", task.target, task.ablations.tag(), seed)));
    let mut log = match &path {
        Some(p) => Transcript::to_file(p)?,
        None => Transcript::new(),
    };
    // initial inventory counts as acquired at tick 0
    let start = StateSummary::of(&sim);
    let env = PlanEnv {
        kb,
        provider,
        memory: if task.ablations.no_memory { None } else { memory },
        limits: Limits {
            max_queries: task.query_limit,
            no_feedback: task.ablations.no_feedback,
        },
        episode: format!("{}-{}", task.target, seed),
        seed,
    };
    let mut subgoals = Vec::new();
    let mut infra = None;
    for g in &goals {
        match run_subgoal(&env, g, &mut sim, &mut log) {
            Ok(r) => {
                let ok = r.achieved();
                subgoals.push(r);
                if !ok {
                    break;
                }
            }
            Err(Error::Provider(msg)) => {
                infra = Some(msg);
                break;
            }
            Err(e) => return Err(e),
        }
    }
    log.flush()?;
    let mut milestones: Vec<(String, u64)> = start.inventory.keys().map(|k| (k.clone(), 0)).collect();
    for (item, t) in milestones_from(log.records()) {
        if !milestones.iter().any(|(i, _)| *i == item) {
            milestones.push((item, t));
        }
    }
    let success = infra.is_none() && sim.agent.count(&task.target) >= task.count;
    let report = EpisodeReport {
        task: task.clone(),
        seed,
        success,
        ticks_used: sim.world.tick_count,
        queries_used: subgoals.iter().map(|s| s.queries).sum(),
        milestones,
        subgoals: subgoals
            .iter()
            .map(|s| SubgoalLine {
                object: s.goal.object.clone(),
                count: s.goal.count,
                outcome: s.outcome,
                queries: s.queries,
                skipped: s.skipped,
            })
            .collect(),
        transcript: path.map(|p| p.display().to_string()),
        infrastructure_error: infra,
    };
    Ok(EpisodeRun { report, subgoals })
}

/// Runs one task in the world generated from `seed`.
pub fn run_episode(
    kb: &KnowledgeBase,
    task: &TaskSpec,
    seed: u64,
    provider: &dyn PlanProvider,
    memory: Option<&MemoryStore>,
    opts: &EpisodeOptions,
) -> Result<EpisodeReport> {
    episode(kb, task, seed, provider, memory, opts).map(|r| r.report)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaskResult {
    pub task: TaskSpec,
    /// Games at the final tier, excluding infrastructure errors.
    pub games: u32,
    pub successes: u32,
    /// Percent.
    pub rate: f64,
    pub infrastructure_errors: u32,
    /// Percent of games in which each milestone item was obtained.
    pub milestone_rates: Vec<(String, f64)>,
    pub mean_ticks: f64,
    pub mean_queries: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub results: Vec<TaskResult>,
    pub episodes: Vec<EpisodeReport>,
    pub runtime_secs: f64,
}

#[derive(Clone, Debug)]
pub struct SuiteOptions {
    pub trials: u32,
    pub incremental: bool,
    pub first_seed: u64,
    pub parallel: bool,
    pub episode: EpisodeOptions,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions {
            trials: 40,
            incremental: false,
            first_seed: SUITE_SEED,
            parallel: true,
            episode: EpisodeOptions::default(),
        }
    }
}

/// Milestone items reported for a task: the diamond ladder when it applies,
/// otherwise every scheduled object.
pub fn milestone_items(kb: &KnowledgeBase, task: &TaskSpec) -> Vec<String> {
    let full = TaskSpec { ablations: Ablations::default(), ..task.clone() };
    let objects: Vec<String> = plan_schedule(kb, &full)
        .map(|g| g.into_iter().map(|g| g.object).collect())
        .unwrap_or_default();
    if DIAMOND_MILESTONES.iter().all(|m| objects.iter().any(|o| o == m)) {
        return DIAMOND_MILESTONES.iter().map(|s| s.to_string()).collect();
    }
    let mut seen = BTreeSet::new();
    objects.into_iter().filter(|o| seen.insert(o.clone())).collect()
}

/// Runs episodes for `seeds`. Each episode reads a snapshot of `memory`;
/// new recordings are added afterwards in seed order.
pub fn run_batch(
    kb: &KnowledgeBase,
    task: &TaskSpec,
    seeds: &[u64],
    provider: &dyn PlanProvider,
    memory: Option<&MemoryStore>,
    opts: &EpisodeOptions,
    parallel: bool,
) -> Result<Vec<EpisodeReport>> {
    let one = |&seed: &u64| {
        let snapshot = memory.cloned();
        episode(kb, task, seed, provider, snapshot.as_ref(), opts)
    };
    let runs: Vec<Result<EpisodeRun>> = if parallel {
        seeds.par_iter().map(one).collect()
    } else {
        seeds.iter().map(one).collect()
    };
    let mut out = Vec::with_capacity(runs.len());
    for r in runs {
        let r = r?;
        if let (Some(m), false) = (memory, task.ablations.no_memory) {
            for s in r.subgoals.iter().filter(|s| s.achieved() && !s.executed.is_empty()) {
                let seq = ActionSequence::new(s.executed.clone(), format!("{}-{}", task.target, r.report.seed), r.report.seed);
                m.record(&goal_key(&s.goal), seq)?;
            }
        }
        out.push(r.report);
    }
    Ok(out)
}

fn summarize(kb: &KnowledgeBase, task: &TaskSpec, episodes: &[EpisodeReport]) -> TaskResult {
    let counted: Vec<&EpisodeReport> = episodes.iter().filter(|e| e.infrastructure_error.is_none()).collect();
    let games = counted.len() as u32;
    let successes = counted.iter().filter(|e| e.success).count() as u32;
    let pct = |n: usize| if games == 0 { 0.0 } else { 100.0 * n as f64 / games as f64 };
    let milestone_rates = milestone_items(kb, task)
        .into_iter()
        .map(|m| {
            let n = counted.iter().filter(|e| e.milestone_tick(&m).is_some()).count();
            (m, pct(n))
        })
        .collect();
    let mean = |f: &dyn Fn(&EpisodeReport) -> f64| {
        if games == 0 {
            0.0
        } else {
            counted.iter().map(|e| f(e)).sum::<f64>() / games as f64
        }
    };
    TaskResult {
        task: task.clone(),
        games,
        successes,
        rate: pct(successes as usize),
        infrastructure_errors: episodes.len() as u32 - games,
        milestone_rates,
        mean_ticks: mean(&|e| e.ticks_used as f64),
        mean_queries: mean(&|e| e.queries_used as f64),
    }
}

/// Games to play at each step of the escalation, given successes so far.
pub fn next_tier(games: u32, successes: u32) -> Option<u32> {
    if successes > 1 {
        return None;
    }
    TIERS.iter().copied().find(|&t| t > games)
}

pub fn run_suite(
    kb: &KnowledgeBase,
    tasks: &[TaskSpec],
    provider: &dyn PlanProvider,
    memory: Option<&MemoryStore>,
    opts: &SuiteOptions,
) -> Result<SuiteReport> {
    if opts.trials == 0 && !opts.incremental {
        return Err(Error::Config {
            field: "trials".into(),
            reason: "must be at least 1".into(),
        });
    }
    let started = Instant::now();
    let mut results = Vec::new();
    let mut all = Vec::new();
    for task in tasks {
        let seeds = |from: u32, to: u32| -> Vec<u64> { (from..to).map(|i| opts.first_seed + i as u64).collect() };
        let mut episodes = Vec::new();
        if opts.incremental {
            let mut games = 0;
            while let Some(t) = next_tier(games, episodes.iter().filter(|e: &&EpisodeReport| e.success).count() as u32) {
                if games > 0 && t == games {
                    break;
                }
                episodes.extend(run_batch(kb, task, &seeds(games, t), provider, memory, &opts.episode, opts.parallel)?);
                games = t;
            }
        } else {
            episodes = run_batch(kb, task, &seeds(0, opts.trials), provider, memory, &opts.episode, opts.parallel)?;
        }
        results.push(summarize(kb, task, &episodes));
        all.extend(episodes);
    }
    Ok(SuiteReport {
        results,
        episodes: all,
        runtime_secs: started.elapsed().as_secs_f64(),
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WarmupLine {
    pub key: String,
    pub trials: u32,
    pub successes: u32,
    pub summarized: bool,
}

/// Every distinct sub-goal in the decomposition of `targets`, prerequisites first.
pub fn subgoals_of(kb: &KnowledgeBase, targets: &[(String, u32)]) -> Result<Vec<Goal>> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for (t, n) in targets {
        for g in schedule(&decompose(kb, t, *n)?) {
            if seen.insert(g.object.clone()) {
                out.push(g);
            }
        }
    }
    Ok(out)
}

/// Practices each sub-goal on its own, with its materials and tool handed
/// over, until its memory entry has a summary or `max_trials` is reached.
pub fn warmup(
    kb: &KnowledgeBase,
    goals: &[Goal],
    provider: &dyn PlanProvider,
    memory: &MemoryStore,
    max_trials: u32,
    first_seed: u64,
) -> Result<Vec<WarmupLine>> {
    let mut lines = Vec::new();
    for (gi, goal) in goals.iter().enumerate() {
        let key = goal_key(goal);
        let mut line = WarmupLine { key: key.clone(), trials: 0, successes: 0, summarized: false };
        while line.trials < max_trials && !memory.has_summary(&key) {
            let seed = first_seed + (gi as u64) * 1000 + line.trials as u64;
            line.trials += 1;
            let mut sim = Sim::spawn(&WorldConfig::with_seed(seed), DEFAULT_TICK_LIMIT)?;
            for (m, n) in goal.material.iter().flatten() {
                sim.agent.add_item(m, *n);
            }
            if let Some(t) = &goal.tool {
                sim.agent.add_item(t, 1);
            }
            let env = PlanEnv {
                kb,
                provider,
                memory: Some(memory),
                limits: Limits::default(),
                episode: format!("warmup-{key}"),
                seed,
            };
            let r = run_subgoal(&env, goal, &mut sim, &mut Transcript::new())?;
            if r.achieved() {
                line.successes += 1;
            }
        }
        line.summarized = memory.has_summary(&key);
        lines.push(line);
    }
    Ok(lines)
}

/// Mean queries over sub-goals that were achieved by planning.
pub fn mean_queries_to_success(episodes: &[EpisodeReport]) -> Option<f64> {
    let q: Vec<u32> = episodes
        .iter()
        .flat_map(|e| &e.subgoals)
        .filter(|s| s.outcome == SubgoalOutcome::Achieved && !s.skipped)
        .map(|s| s.queries)
        .collect();
    if q.is_empty() {
        None
    } else {
        Some(q.iter().sum::<u32>() as f64 / q.len() as f64)
    }
}

/// Success counts per ablation row over `seeds`, memory starting empty.
pub fn ablation_table(
    kb: &KnowledgeBase,
    target: &str,
    seeds: &[u64],
    provider: &dyn PlanProvider,
) -> Result<Vec<(String, TaskResult)>> {
    let mut out = Vec::new();
    for (name, a) in Ablations::ladder() {
        let task = TaskSpec::new(target, 1).with_ablations(a);
        let memory = MemoryStore::new();
        let eps = run_batch(kb, &task, seeds, provider, Some(&memory), &EpisodeOptions::default(), true)?;
        out.push((name.to_string(), summarize(kb, &task, &eps)));
    }
    Ok(out)
}

/// Per-item counts keyed by name, for tables.
pub fn rate_map(r: &TaskResult) -> BTreeMap<String, f64> {
    r.milestone_rates.iter().cloned().collect()
}
