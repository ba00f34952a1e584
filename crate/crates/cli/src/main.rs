use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use blockmind::harness::{
    self, ablation_table, run_suite, subgoals_of, Ablations, EpisodeOptions, SuiteOptions, TaskSpec,
};
use blockmind::planner::{PlanProvider, RemoteProvider, RulePlanner};
use blockmind::{decompose, KnowledgeBase, MemoryStore};

#[derive(Parser)]
#[command(name = "blockmind", version, about = "Run goal-driven agents in a voxel world")]
struct Cli {
    /// Directory holding recipes.json and facts.json instead of the bundled tables
    #[arg(long, global = true)]
    kb: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Play one episode
    Run(RunArgs),
    /// Play many episodes per task and report success rates
    Suite(SuiteArgs),
    /// Practice every sub-goal of the given targets to fill the memory
    Warmup(WarmupArgs),
    /// Print the sub-goal tree of an item
    DumpTree(TreeArgs),
    /// Success rates with components removed one at a time
    Ablate(AblateArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ProviderKind {
    Rule,
    Remote,
}

#[derive(Args)]
struct Common {
    #[arg(long, value_enum, default_value = "rule")]
    provider: ProviderKind,
    /// JSON memory file, created when missing
    #[arg(long)]
    memory: Option<PathBuf>,
    /// Output directory for report.json and transcripts
    #[arg(long, default_value = "runs")]
    out: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    task: String,
    #[arg(long, default_value_t = 1)]
    count: u32,
    #[arg(long, default_value_t = harness::SUITE_SEED)]
    seed: u64,
    #[arg(long)]
    no_decompose: bool,
    #[arg(long)]
    no_feedback: bool,
    #[arg(long)]
    no_info: bool,
    #[arg(long)]
    no_memory: bool,
    #[arg(long, default_value_t = harness::DEFAULT_TICK_LIMIT)]
    tick_limit: u64,
    #[arg(long, default_value_t = blockmind::planner::MAX_QUERIES)]
    query_limit: u32,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct SuiteArgs {
    /// JSON list of task objects, or one `item [count]` per line
    #[arg(long)]
    tasks: PathBuf,
    #[arg(long, default_value_t = 40)]
    trials: u32,
    /// Start with 20 games and escalate to 50, 100, 200 while successes stay at 1 or fewer
    #[arg(long)]
    incremental: bool,
    #[arg(long, default_value_t = harness::SUITE_SEED)]
    first_seed: u64,
    /// Write a transcript per episode
    #[arg(long)]
    transcripts: bool,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct WarmupArgs {
    /// Targets whose sub-goals are practised, same format as suite tasks
    #[arg(long)]
    goals: PathBuf,
    #[arg(long, default_value_t = 20)]
    max_trials: u32,
    #[arg(long, default_value_t = 5000)]
    first_seed: u64,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct TreeArgs {
    item: String,
    #[arg(long, default_value_t = 1)]
    count: u32,
    /// Graphviz output
    #[arg(long)]
    dot: bool,
}

#[derive(Args)]
struct AblateArgs {
    #[arg(long, default_value = "diamond")]
    task: String,
    #[arg(long, default_value_t = 40)]
    trials: u32,
    #[arg(long, default_value_t = harness::SUITE_SEED)]
    first_seed: u64,
}

fn read_tasks(path: &Path) -> Result<Vec<TaskSpec>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    if text.trim_start().starts_with('[') {
        return serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()));
    }
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        let item = parts.next().expect("non-empty line");
        let count = match parts.next() {
            Some(c) => c.parse().with_context(|| format!("{}:{}: bad count", path.display(), i + 1))?,
            None => 1,
        };
        out.push(TaskSpec::new(item, count));
    }
    if out.is_empty() {
        bail!("{} lists no tasks", path.display());
    }
    Ok(out)
}

fn provider<'a>(kind: ProviderKind, kb: &'a KnowledgeBase) -> Result<Box<dyn PlanProvider + 'a>> {
    Ok(match kind {
        ProviderKind::Rule => Box::new(RulePlanner::new(kb)),
        ProviderKind::Remote => Box::new(RemoteProvider::from_env()?),
    })
}

fn memory(path: &Option<PathBuf>) -> Result<MemoryStore> {
    Ok(match path {
        Some(p) => MemoryStore::open(p)?,
        None => MemoryStore::new(),
    })
}

fn write_json(dir: &Path, name: &str, value: &impl serde::Serialize) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let p = dir.join(name);
    std::fs::write(&p, serde_json::to_string_pretty(value)?).with_context(|| format!("writing {}", p.display()))?;
    Ok(p)
}

fn main() -> Result<()> {
    env_logger::init();
    let cli = Cli::parse();
    let owned;
    let kb: &KnowledgeBase = match &cli.kb {
        Some(dir) => {
            owned = KnowledgeBase::load(dir)?;
            &owned
        }
        None => KnowledgeBase::bundled(),
    };
    match cli.cmd {
        Cmd::Run(a) => run(kb, a),
        Cmd::Suite(a) => suite(kb, a),
        Cmd::Warmup(a) => warm(kb, a),
        Cmd::DumpTree(a) => {
            let t = decompose(kb, &a.item, a.count)?;
            print!("{}", if a.dot { t.to_dot() } else { t.to_text() });
            Ok(())
        }
        Cmd::Ablate(a) => ablate(kb, a),
    }
}

fn run(kb: &KnowledgeBase, a: RunArgs) -> Result<()> {
    let task = TaskSpec {
        target: a.task,
        count: a.count,
        tick_limit: a.tick_limit,
        query_limit: a.query_limit,
        ablations: Ablations {
            no_decompose: a.no_decompose,
            no_feedback: a.no_feedback,
            no_info: a.no_info,
            no_memory: a.no_memory,
        },
    };
    let p = provider(a.common.provider, kb)?;
    let mem = memory(&a.common.memory)?;
    let opts = EpisodeOptions {
        transcript_dir: Some(a.common.out.clone()),
        world: None,
    };
    let r = harness::run_episode(kb, &task, a.seed, p.as_ref(), Some(&mem), &opts)?;
    println!("{:<16} {:>4} {:>8} {:>7}", "sub-goal", "n", "outcome", "queries");
    for s in &r.subgoals {
        let outcome = if s.skipped { "skipped".to_string() } else { format!("{:?}", s.outcome) };
        println!("{:<16} {:>4} {:>8} {:>7}", s.object, s.count, outcome, s.queries);
    }
    println!();
    println!("milestones:");
    for (item, tick) in &r.milestones {
        println!("  {item:<16} tick {tick}");
    }
    println!();
    println!(
        "{} {} x{} seed {}: {} in {} ticks, {} queries",
        if r.success { "SUCCESS" } else { "FAILURE" },
        task.target,
        task.count,
        a.seed,
        if r.success { "obtained" } else { "not obtained" },
        r.ticks_used,
        r.queries_used
    );
    if let Some(e) = &r.infrastructure_error {
        println!("provider error: {e}");
    }
    let p = write_json(&a.common.out, "report.json", &r)?;
    println!("report: {}", p.display());
    Ok(())
}

fn suite(kb: &KnowledgeBase, a: SuiteArgs) -> Result<()> {
    let tasks = read_tasks(&a.tasks)?;
    let p = provider(a.common.provider, kb)?;
    let mem = memory(&a.common.memory)?;
    let opts = SuiteOptions {
        trials: a.trials,
        incremental: a.incremental,
        first_seed: a.first_seed,
        parallel: true,
        episode: EpisodeOptions {
            transcript_dir: a.transcripts.then(|| a.common.out.join("transcripts")),
            world: None,
        },
    };
    let r = run_suite(kb, &tasks, p.as_ref(), Some(&mem), &opts)?;
    println!("{:<18} {:>6} {:>6} {:>8} {:>10}", "task", "games", "wins", "rate %", "mean ticks");
    for t in &r.results {
        println!(
            "{:<18} {:>6} {:>6} {:>8.1} {:>10.0}",
            format!("{} x{}", t.task.target, t.task.count),
            t.games,
            t.successes,
            t.rate,
            t.mean_ticks
        );
        for (m, rate) in &t.milestone_rates {
            println!("    {m:<20} {rate:>6.1}%");
        }
    }
    println!("runtime {:.1}s", r.runtime_secs);
    let p = write_json(&a.common.out, "report.json", &r)?;
    println!("report: {}", p.display());
    Ok(())
}

fn warm(kb: &KnowledgeBase, a: WarmupArgs) -> Result<()> {
    let targets: Vec<(String, u32)> = read_tasks(&a.goals)?.into_iter().map(|t| (t.target, t.count)).collect();
    let goals = subgoals_of(kb, &targets)?;
    let p = provider(a.common.provider, kb)?;
    let mem = memory(&a.common.memory)?;
    let lines = harness::warmup(kb, &goals, p.as_ref(), &mem, a.max_trials, a.first_seed)?;
    println!("{:<16} {:>6} {:>6} {:>10}", "sub-goal", "trials", "wins", "summarized");
    for l in &lines {
        println!("{:<16} {:>6} {:>6} {:>10}", l.key, l.trials, l.successes, l.summarized);
    }
    if a.common.memory.is_none() {
        let p = a.common.out.join("memory.json");
        std::fs::create_dir_all(&a.common.out)?;
        mem.save(&p)?;
        println!("memory: {}", p.display());
    }
    Ok(())
}

fn ablate(kb: &KnowledgeBase, a: AblateArgs) -> Result<()> {
    let seeds: Vec<u64> = (0..a.trials as u64).map(|i| a.first_seed + i).collect();
    let rows = ablation_table(kb, &a.task, &seeds, &RulePlanner::new(kb))?;
    print!("{:<14}", "setting");
    for (m, _) in &rows[0].1.milestone_rates {
        print!(" {:>15}", m);
    }
    println!();
    for (name, r) in &rows {
        print!("{name:<14}");
        for (_, rate) in &r.milestone_rates {
            print!(" {:>14.1}%", rate);
        }
        println!();
    }
    Ok(())
}
