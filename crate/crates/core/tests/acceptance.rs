//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion.

mod common;

use std::collections::{BTreeMap, HashSet, VecDeque};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use blockmind::actions::{execute, plan, Action, NavGoal, NavGrid, StructuredAction};
use blockmind::decomposer::{decompose, schedule, SubGoalTree};
use blockmind::harness::{
    ablation_table, mean_queries_to_success, run_batch, run_episode, run_suite, subgoals_of, warmup, EpisodeOptions,
    SuiteOptions, TaskSpec,
};
use blockmind::memory::{heuristic_summarize, ActionSequence};
use blockmind::planner::parse::{parse_response, render_response};
use blockmind::planner::{PlanResponse, RulePlanner};
use blockmind::world::{BlockKind, Cell, Sim, World};
use blockmind::{KnowledgeBase, MemoryStore};
use common::{is_subsequence, oracle, pick, terrain, topologically_valid, Tables, N};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Criterion = (&'static str, fn() -> Verdict);

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

fn within(limit: Duration, start: Instant) -> (bool, String) {
    let t = start.elapsed();
    (t <= limit, format!("{:.2}s of {}s", t.as_secs_f64(), limit.as_secs()))
}

fn kb() -> &'static KnowledgeBase {
    KnowledgeBase::bundled()
}

fn node_multiset(t: &SubGoalTree, out: &mut BTreeMap<(String, u32), usize>) {
    *out.entry((t.goal.object.clone(), t.goal.count)).or_insert(0) += 1;
    for c in &t.children {
        node_multiset(c, out);
    }
}

fn decomposition() -> Verdict {
    let start = Instant::now();
    let tree = decompose(kb(), "diamond", 1).unwrap();
    let mut got = BTreeMap::new();
    node_multiset(&tree, &mut got);
    let expect = Tables::bundled().closure("diamond", 1);
    let (fast, t) = within(Duration::from_secs(1), start);
    verdict(got == expect && fast, format!("{} nodes, {t}", tree.size()))
}

fn schedule_order() -> Verdict {
    let start = Instant::now();
    let tables = Tables::bundled();
    let mut bad = Vec::new();
    let items = tables.items();
    for item in &items {
        let order: Vec<(String, u32)> =
            schedule(&decompose(kb(), item, 1).unwrap()).into_iter().map(|g| (g.object, g.count)).collect();
        if let Err(e) = topologically_valid(&tables, &order) {
            bad.push(e);
        }
    }
    let (fast, t) = within(Duration::from_secs(1), start);
    verdict(bad.is_empty() && fast, format!("{} items, {} out of order, {t}", items.len(), bad.len()))
}

fn astar_optimality() -> Verdict {
    let start = Instant::now();
    let mut mismatches = 0;
    let mut reachable = 0;
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = terrain(seed, rng.gen_range(0.0..0.25));
        let budget = rng.gen_range(0..4);
        let (s, t) = loop {
            let s = pick(&g, (rng.gen_range(0..N), rng.gen_range(0..N)), true);
            let t = pick(&g, (rng.gen_range(0..N), rng.gen_range(0..N)), false);
            if let (Some(s), Some(t)) = (s, t) {
                break (s, t);
            }
        };
        let expect = oracle(&g, s, t, budget);
        let got = plan(&g, s, NavGoal::Near(t), budget).ok().filter(|p| p.complete).map(|p| p.cost);
        reachable += expect.is_some() as usize;
        if got != expect {
            mismatches += 1;
        }
    }
    let (fast, t) = within(Duration::from_secs(30), start);
    verdict(mismatches == 0 && fast, format!("100 grids, {reachable} reachable, {mismatches} mismatches, {t}"))
}

fn standable(w: &World, c: Cell) -> bool {
    w.passable(c) && w.passable(c.up()) && w.solid(c.down())
}

/// Every standing cell reachable from `from` by walking, one-block jumps and falls of up to three.
fn walkable_from(w: &World, from: Cell) -> HashSet<Cell> {
    let mut seen = HashSet::from([from]);
    let mut q = VecDeque::from([from]);
    while let Some(c) = q.pop_front() {
        for (dx, dz) in [(0, -1), (1, 0), (0, 1), (-1, 0)] {
            let a = c.offset(dx, 0, dz);
            let mut next = None;
            if w.passable(a) && w.passable(a.up()) {
                let mut l = a;
                for _ in 0..=3 {
                    if w.solid(l.down()) {
                        next = Some(l);
                        break;
                    }
                    l = l.down();
                    if !w.passable(l) {
                        break;
                    }
                }
            } else if w.solid(a) && w.passable(c.up().up()) && standable(w, a.up()) {
                next = Some(a.up());
            }
            if let Some(n) = next {
                if seen.insert(n) {
                    q.push_back(n);
                }
            }
        }
    }
    seen
}

/// Puts a chest on open ground somewhere out of sight but within walking reach of the spawn.
fn place_hidden_target(sim: &mut Sim, rng: &mut ChaCha8Rng) -> Option<Cell> {
    let [dx, _, dz] = sim.world.dims();
    let spawn = sim.agent.feet();
    let reach = walkable_from(&sim.world, spawn);
    for _ in 0..50 {
        let (x, z) = (rng.gen_range(0..dx), rng.gen_range(0..dz));
        let y = sim.world.surface_height(x, z);
        let ground = sim.world.block(Cell::new(x, y, z));
        let cell = Cell::new(x, y + 1, z);
        if !matches!(ground, BlockKind::Grass | BlockKind::Dirt | BlockKind::Sand | BlockKind::Stone)
            || !sim.world.passable(cell)
            || cell.chebyshev(spawn) < 24
        {
            continue;
        }
        let adjacent = (-1..=1).any(|ox| (-1..=1).any(|oz| (-1..=1).any(|oy| reach.contains(&cell.offset(ox, oy, oz)))));
        if !adjacent {
            continue;
        }
        sim.world.set_block(cell, BlockKind::Chest);
        if sim.observe().sees("chest") {
            sim.world.set_block(cell, BlockKind::Air);
            continue;
        }
        return Some(cell);
    }
    None
}

fn exploration() -> Verdict {
    let start = Instant::now();
    let (mut maps, mut found, mut seed) = (0, 0, 0u64);
    while maps < 100 {
        let mut sim = Sim::spawn(&blockmind::WorldConfig::with_seed(seed), 20_000).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        seed += 1;
        if place_hidden_target(&mut sim, &mut rng).is_none() {
            continue;
        }
        maps += 1;
        let explore = Action::Explore { object: "chest".into(), strategy: "bfs".into() };
        let r = execute(&mut sim, kb(), &StructuredAction::new(explore));
        if r.succeeded() && r.steps <= 10_000 {
            found += 1;
        }
    }
    let (fast, t) = within(Duration::from_secs(120), start);
    verdict(found >= 95 && fast, format!("{found}/100 found within 10000 steps ({seed} seeds drawn), {t}"))
}

fn suite_rates() -> Verdict {
    let start = Instant::now();
    let rule = RulePlanner::new(kb());
    let tasks: Vec<TaskSpec> = ["crafting_table", "wooden_pickaxe", "stone_pickaxe", "iron_pickaxe", "diamond"]
        .into_iter()
        .map(|t| TaskSpec::new(t, 1))
        .collect();
    let opts = SuiteOptions { trials: 40, first_seed: 1000, parallel: true, ..Default::default() };
    let memory = MemoryStore::new();
    let r = run_suite(kb(), &tasks, &rule, Some(&memory), &opts).unwrap();
    let rate = |t: &str| r.results.iter().find(|x| x.task.target == t).map(|x| x.rate).unwrap_or(0.0);
    let ok = rate("diamond") >= 67.5
        && ["crafting_table", "wooden_pickaxe", "stone_pickaxe"].iter().all(|t| rate(t) == 100.0)
        && rate("iron_pickaxe") >= 95.0
        && r.episodes.iter().all(|e| e.task.tick_limit == 12_000 && e.task.query_limit == 30);
    let (fast, t) = within(Duration::from_secs(60), start);
    let rates: Vec<String> = r.results.iter().map(|x| format!("{} {:.1}%", x.task.target, x.rate)).collect();
    verdict(ok && fast, format!("{}; all 200 episodes within {t}", rates.join(", ")))
}

fn ablation_order() -> Verdict {
    let start = Instant::now();
    let rule = RulePlanner::new(kb());
    let seeds: Vec<u64> = (1000..1040).collect();
    let rows = ablation_table(kb(), "diamond", &seeds, &rule).unwrap();
    let rates: Vec<f64> = rows.iter().map(|(_, r)| r.rate).collect();
    let ordered = rates.windows(2).all(|w| w[0] >= w[1]);
    let last = rows.last().unwrap();
    let ok = last.0 == "no_decompose" && last.1.rate == 0.0 && ordered;
    let text: Vec<String> = rows.iter().map(|(n, r)| format!("{n} {:.1}%", r.rate)).collect();
    verdict(ok, format!("{}, {:.1}s", text.join(" >= "), start.elapsed().as_secs_f64()))
}

fn memory_efficacy() -> Verdict {
    let start = Instant::now();
    let rule = RulePlanner::new(kb());
    let memory = MemoryStore::new();
    let goals = subgoals_of(kb(), &[("diamond".into(), 1)]).unwrap();
    let lines = warmup(kb(), &goals, &rule, &memory, 20, 5000).unwrap();
    let covered = lines.iter().all(|l| l.summarized);
    let task = TaskSpec::new("diamond", 1);
    let seeds: Vec<u64> = (3000..3020).collect();
    let warm = memory.clone();
    let with = run_batch(kb(), &task, &seeds, &rule, Some(&warm), &EpisodeOptions::default(), true).unwrap();
    let without = run_batch(kb(), &task, &seeds, &rule, None, &EpisodeOptions::default(), true).unwrap();
    let (a, b) = (mean_queries_to_success(&with), mean_queries_to_success(&without));
    let lower = matches!((a, b), (Some(a), Some(b)) if a < b);
    let (fast, t) = within(Duration::from_secs(600), start);
    verdict(
        covered && lower && fast,
        format!(
            "{} sub-goals summarized: {covered}; mean queries {:.3} with memory vs {:.3} without, {t}",
            lines.len(),
            a.unwrap_or(f64::NAN),
            b.unwrap_or(f64::NAN)
        ),
    )
}

fn random_action(rng: &mut ChaCha8Rng) -> StructuredAction {
    let objects = ["log", "stone", "iron_ore"];
    let o = objects[rng.gen_range(0..objects.len())].to_string();
    StructuredAction::new(match rng.gen_range(0..5) {
        0 => Action::Explore { object: o, strategy: "dfs".into() },
        1 => Action::Approach { object: o },
        2 => Action::Mine { object: o, tool: None, count: None },
        3 => Action::DigDown { ylevel: rng.gen_range(2..60) },
        _ => Action::GoUp,
    })
}

/// Five variants of one random plan, each with a few steps dropped or inserted.
fn random_batch(rng: &mut ChaCha8Rng) -> Vec<ActionSequence> {
    let base: Vec<StructuredAction> = (0..rng.gen_range(0..12)).map(|_| random_action(rng)).collect();
    (0..5)
        .map(|i| {
            let mut v = base.clone();
            for _ in 0..rng.gen_range(0..4) {
                if !v.is_empty() && rng.gen_bool(0.5) {
                    v.remove(rng.gen_range(0..v.len()));
                } else {
                    let at = rng.gen_range(0..=v.len());
                    v.insert(at, random_action(rng));
                }
            }
            ActionSequence::new(v, "batch", i)
        })
        .collect()
}

fn summary_is_common_subsequence() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (mut clean, mut violations) = (0, 0);
    for _ in 0..200 {
        let batch = random_batch(&mut rng);
        let s = heuristic_summarize(&batch);
        if s.warning {
            continue;
        }
        clean += 1;
        if !batch.iter().all(|q| is_subsequence(&s.sequence.actions, &q.actions)) {
            violations += 1;
        }
    }
    let (fast, t) = within(Duration::from_secs(10), start);
    verdict(violations == 0 && fast, format!("{clean}/200 batches without warning, {violations} violations, {t}"))
}

fn determinism() -> Verdict {
    let rule = RulePlanner::new(kb());
    let mut differing = Vec::new();
    for (target, seed) in [("diamond", 1000), ("iron_pickaxe", 1017), ("stone_pickaxe", 1033)] {
        let task = TaskSpec::new(target, 1);
        let run = || {
            let r = run_episode(kb(), &task, seed, &rule, Some(&MemoryStore::new()), &EpisodeOptions::default()).unwrap();
            serde_json::to_vec(&r).unwrap()
        };
        if run() != run() {
            differing.push(format!("{target}/{seed}"));
        }
    }
    verdict(differing.is_empty(), format!("3 episodes rerun, differing: {differing:?}"))
}

fn sample_responses() -> Vec<String> {
    let rule = RulePlanner::new(kb());
    let mut out = vec![
        "```json\n{\"thoughts\": \"go\", \"action_list\": [{\"name\": \"explore\", \"args\": {\"object\": \"log\", \"strategy\": \"bfs\"}, \"expectation\": \"see a log\"}]}\n```".to_string(),
        "Sure. {\"explanation\": \"none\", \"thoughts\": \"t\", \"action_list\": [{\"name\": \"dig_down\", \"args\": {\"ylevel\": 11}, \"expectation\": \"\"}]} done".to_string(),
    ];
    for (item, inv) in [("log", vec![]), ("wooden_pickaxe", vec![("planks", 3), ("stick", 2), ("crafting_table", 1)]), ("diamond", vec![("iron_pickaxe", 1)])] {
        let ctx = blockmind::planner::QueryContext {
            goal: kb().make_goal(item, 1).unwrap(),
            state: blockmind::actions::StateSummary {
                inventory: inv.into_iter().map(|(i, n)| (i.to_string(), n)).collect(),
                biome: "forest".into(),
                y_level: 60,
                ground_status: blockmind::world::GroundStatus::OnGround,
            },
            feedback: None,
            reference_plan: None,
        };
        let r: PlanResponse = rule.plan(&ctx);
        out.push(render_response(&r));
    }
    out
}

fn mutate(rng: &mut ChaCha8Rng, text: &str) -> String {
    let mut chars: Vec<char> = text.chars().collect();
    let noise = ['{', '}', '[', ']', '"', ':', ',', '`', '\\', 'x', '0', ' ', '\n', '\u{0}', 'é', '🙂'];
    for _ in 0..rng.gen_range(1..6) {
        let n = chars.len();
        match rng.gen_range(0..6) {
            0 if n > 0 => {
                let i = rng.gen_range(0..n);
                let j = (i + rng.gen_range(1..8)).min(n);
                chars.drain(i..j);
            }
            1 => chars.insert(rng.gen_range(0..=n), noise[rng.gen_range(0..noise.len())]),
            2 if n > 0 => chars[rng.gen_range(0..n)] = noise[rng.gen_range(0..noise.len())],
            3 if n > 0 => chars.truncate(rng.gen_range(0..n)),
            4 if n > 1 => chars.swap(rng.gen_range(0..n), rng.gen_range(0..n)),
            _ if n > 0 => {
                let i = rng.gen_range(0..n);
                let j = (i + rng.gen_range(1..16)).min(n);
                let dup: Vec<char> = chars[i..j].to_vec();
                chars.splice(i..i, dup);
            }
            _ => {}
        }
    }
    chars.into_iter().collect()
}

fn parser_robustness() -> Verdict {
    let start = Instant::now();
    let bases = sample_responses();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let (mut crashes, mut invalid, mut blank) = (0, 0, 0);
    for i in 0..1000 {
        let text = mutate(&mut rng, &bases[i % bases.len()]);
        match catch_unwind(AssertUnwindSafe(|| parse_response(&text))) {
            Err(_) => crashes += 1,
            Ok(Err(e)) => {
                invalid += 1;
                if e.description.trim().is_empty() {
                    blank += 1;
                }
            }
            Ok(Ok(_)) => {}
        }
    }
    let (fast, t) = within(Duration::from_secs(10), start);
    verdict(
        crashes == 0 && blank == 0 && fast,
        format!("1000 mutations, {crashes} crashes, {invalid} rejected, {blank} without description, {t}"),
    )
}

#[test]
fn acceptance_criteria() {
    let criteria: [Criterion; 10] = [
        ("decomposition matches closure oracle", decomposition),
        ("schedule is topological", schedule_order),
        ("A* equals BFS oracle", astar_optimality),
        ("breadth-first exploration finds reachable targets", exploration),
        ("task suite success rates", suite_rates),
        ("ablation ordering", ablation_order),
        ("memory lowers queries to success", memory_efficacy),
        ("summary is a common subsequence", summary_is_common_subsequence),
        ("reruns are byte-identical", determinism),
        ("parser survives mutations", parser_robustness),
    ];
    let mut failed = Vec::new();
    for (i, (name, check)) in criteria.iter().enumerate() {
        let v = check();
        println!("{} {:>2} {name}: {}", if v.pass { "PASS" } else { "FAIL" }, i + 1, v.detail);
        if !v.pass {
            failed.push(i + 1);
        }
    }
    assert!(failed.is_empty(), "failing criteria: {failed:?}");
}
