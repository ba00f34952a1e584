use std::sync::Mutex;

use blockmind::actions::{Action, StructuredAction};
use blockmind::knowledge::KnowledgeBase;
use blockmind::memory::ActionSequence;
use blockmind::planner::parse::render_response;
use blockmind::planner::{
    run_subgoal, Limits, PlanEnv, PlanProvider, PlanRequest, PlanResponse, QueryContext, Record, Role,
    SubgoalOutcome, Transcript,
};
use blockmind::world::{AgentState, BlockKind, Cell, Sim, World, WorldConfig};
use blockmind::{Error, MemoryStore, Result};

type Seen = Vec<(Vec<(Role, String)>, QueryContext)>;

/// Replays canned responses in order, repeating the last one, and keeps every request.
struct Scripted {
    replies: Vec<String>,
    seen: Mutex<Seen>,
}

impl Scripted {
    fn new(replies: Vec<String>) -> Self {
        Scripted { replies, seen: Mutex::new(Vec::new()) }
    }

    fn calls(&self) -> usize {
        self.seen.lock().unwrap().len()
    }

    fn query(&self, i: usize) -> String {
        self.seen.lock().unwrap()[i].0.last().unwrap().1.clone()
    }
}

impl PlanProvider for Scripted {
    fn name(&self) -> &str {
        "scripted"
    }

    fn complete(&self, req: &PlanRequest) -> Result<String> {
        let mut seen = self.seen.lock().unwrap();
        let i = seen.len().min(self.replies.len() - 1);
        seen.push((req.messages.iter().map(|m| (m.role, m.content.clone())).collect(), req.context.clone()));
        Ok(self.replies[i].clone())
    }
}

struct Failing;

impl PlanProvider for Failing {
    fn name(&self) -> &str {
        "failing"
    }

    fn complete(&self, _: &PlanRequest) -> Result<String> {
        Err(Error::Provider("connection refused".into()))
    }
}

fn reply(actions: Vec<Action>) -> String {
    render_response(&PlanResponse {
        explanation: None,
        thoughts: "scripted".into(),
        action_list: actions.into_iter().map(StructuredAction::new).collect(),
    })
}

fn log_plan() -> Vec<Action> {
    vec![
        Action::Explore { object: "log".into(), strategy: "bfs".into() },
        Action::Approach { object: "log".into() },
        Action::Mine { object: "log".into(), tool: None, count: None },
    ]
}

/// Flat stone world with one log two cells east of the agent.
fn sim_with_log(ticks: u64) -> Sim {
    let config = WorldConfig { dims: [24, 16, 24], ore_bands: Default::default(), biome_layout: vec![], ..WorldConfig::with_seed(9) };
    let mut w = World::from_fn(&config, |c| match c.y {
        0 => BlockKind::Bedrock,
        y if y < 4 => BlockKind::Stone,
        4 => BlockKind::Grass,
        _ => BlockKind::Air,
    })
    .unwrap();
    w.set_block(Cell::new(14, 5, 12), BlockKind::Log);
    Sim::new(w, AgentState::at(Cell::new(12, 5, 12)), ticks)
}

fn env<'a>(provider: &'a dyn PlanProvider, memory: Option<&'a MemoryStore>, limits: Limits) -> PlanEnv<'a> {
    PlanEnv { kb: KnowledgeBase::bundled(), provider, memory, limits, episode: "test".into(), seed: 7 }
}

fn goal(item: &str, n: u32) -> blockmind::Goal {
    KnowledgeBase::bundled().make_goal(item, n).unwrap()
}

#[test]
fn satisfied_goal_is_skipped_without_queries() {
    let p = Scripted::new(vec![reply(log_plan())]);
    let mut sim = sim_with_log(1000);
    sim.agent.add_item("log", 2);
    let r = run_subgoal(&env(&p, None, Limits::default()), &goal("log", 1), &mut sim, &mut Transcript::new()).unwrap();
    assert!(r.skipped);
    assert_eq!(r.outcome, SubgoalOutcome::Achieved);
    assert_eq!(r.queries, 0);
    assert_eq!(p.calls(), 0);
}

#[test]
fn one_shot_plan_needs_one_query() {
    let p = Scripted::new(vec![reply(log_plan())]);
    let mut sim = sim_with_log(5000);
    let mut log = Transcript::new();
    let r = run_subgoal(&env(&p, None, Limits::default()), &goal("log", 1), &mut sim, &mut log).unwrap();
    assert_eq!(r.outcome, SubgoalOutcome::Achieved);
    assert_eq!(r.queries, 1);
    assert_eq!(r.executed.len(), 3);
    assert_eq!(sim.agent.count("log"), 1);
    let kinds: Vec<&str> = log
        .records()
        .iter()
        .map(|r| match r {
            Record::Subgoal { .. } => "subgoal",
            Record::Query { .. } => "query",
            Record::Response { .. } => "response",
            Record::Execution { .. } => "execution",
            Record::Outcome { .. } => "outcome",
        })
        .collect();
    assert_eq!(kinds, ["subgoal", "query", "response", "execution", "execution", "execution", "outcome"]);
}

#[test]
fn instruction_is_pinned_and_first_query_describes_goal() {
    let p = Scripted::new(vec![reply(log_plan())]);
    let mut sim = sim_with_log(5000);
    run_subgoal(&env(&p, None, Limits::default()), &goal("log", 1), &mut sim, &mut Transcript::new()).unwrap();
    let q = p.query(0);
    assert!(q.starts_with("My current state:\n- inventory: {}"), "{q}");
    assert!(q.contains("The goal is to obtain 1 log."), "{q}");
    assert!(!q.contains("for reference"));
}

#[test]
fn empty_lists_exhaust_the_query_limit() {
    let p = Scripted::new(vec![reply(vec![])]);
    let mut sim = sim_with_log(5000);
    let r = run_subgoal(&env(&p, None, Limits::default()), &goal("log", 1), &mut sim, &mut Transcript::new()).unwrap();
    assert_eq!(r.outcome, SubgoalOutcome::QueryLimit);
    assert_eq!(r.queries, 30);
    assert_eq!(p.calls(), 30);
    assert!(p.query(1).contains("the action list is empty"));
}

#[test]
fn unparseable_reply_counts_and_is_reported() {
    let p = Scripted::new(vec!["I would rather not.".into(), reply(log_plan())]);
    let mut sim = sim_with_log(5000);
    let r = run_subgoal(&env(&p, None, Limits::default()), &goal("log", 1), &mut sim, &mut Transcript::new()).unwrap();
    assert_eq!(r.outcome, SubgoalOutcome::Achieved);
    assert_eq!(r.queries, 2);
    assert!(p.query(1).starts_with("Your last response was not usable"), "{}", p.query(1));
}

#[test]
fn execution_stops_at_the_first_failure() {
    let mut first = vec![Action::Equip { object: "iron_sword".into() }];
    first.extend(log_plan());
    let p = Scripted::new(vec![reply(first), reply(log_plan())]);
    let mut sim = sim_with_log(5000);
    let mut log = Transcript::new();
    let r = run_subgoal(&env(&p, None, Limits::default()), &goal("log", 1), &mut sim, &mut log).unwrap();
    assert_eq!(r.queries, 2);
    let executions = log.records().iter().filter(|r| matches!(r, Record::Execution { .. })).count();
    assert_eq!(executions, 4);
    let q = p.query(1);
    assert!(q.starts_with("Action equip failed, because"), "{q}");
    assert!(q.contains("not_in_inventory"), "{q}");
}

#[test]
fn goal_check_runs_after_every_action() {
    let mut plan = log_plan();
    plan.push(Action::Craft {
        object: "planks".into(),
        materials: [("log".to_string(), 1)].into(),
        tool: None,
        count: Some(4),
    });
    let p = Scripted::new(vec![reply(plan)]);
    let mut sim = sim_with_log(5000);
    let r = run_subgoal(&env(&p, None, Limits::default()), &goal("log", 1), &mut sim, &mut Transcript::new()).unwrap();
    assert_eq!(r.executed.len(), 3);
    assert_eq!(sim.agent.count("planks"), 0);
}

#[test]
fn no_feedback_hides_details_and_state() {
    let p = Scripted::new(vec![reply(vec![Action::Equip { object: "iron_sword".into() }]), reply(log_plan())]);
    let mut sim = sim_with_log(5000);
    let limits = Limits { no_feedback: true, ..Limits::default() };
    run_subgoal(&env(&p, None, limits), &goal("log", 1), &mut sim, &mut Transcript::new()).unwrap();
    let q = p.query(1);
    assert!(q.contains("no details were reported"), "{q}");
    assert!(!q.contains("not_in_inventory"), "{q}");
    let ctx = &p.seen.lock().unwrap()[1].1;
    assert_eq!(ctx.feedback.as_ref().unwrap().reason, None);
}

#[test]
fn reference_plan_goes_only_into_the_first_query() {
    let memory = MemoryStore::new();
    for i in 0..5 {
        let seq = log_plan().into_iter().map(StructuredAction::new).collect();
        memory.record("log", ActionSequence::new(seq, "warm", i)).unwrap();
    }
    assert!(memory.has_summary("log"));
    let p = Scripted::new(vec![reply(vec![Action::Equip { object: "iron_sword".into() }]), reply(log_plan())]);
    let mut sim = sim_with_log(5000);
    run_subgoal(&env(&p, Some(&memory), Limits::default()), &goal("log", 1), &mut sim, &mut Transcript::new())
        .unwrap();
    assert!(p.query(0).contains("Here is one plan to achieve similar goal for reference: [{"));
    assert!(!p.query(1).contains("for reference"));
    let seen = p.seen.lock().unwrap();
    assert!(seen[0].1.reference_plan.is_some());
    assert!(seen[1].1.reference_plan.is_none());
    // one user turn, one reply, one user turn
    assert_eq!(seen[1].0.len(), 3);
}

#[test]
fn success_is_recorded_in_memory() {
    let memory = MemoryStore::new();
    let p = Scripted::new(vec![reply(log_plan())]);
    let mut sim = sim_with_log(5000);
    run_subgoal(&env(&p, Some(&memory), Limits::default()), &goal("log", 1), &mut sim, &mut Transcript::new())
        .unwrap();
    let e = memory.entry("log").unwrap();
    assert_eq!(e.recordings.len(), 1);
    assert_eq!(e.recordings[0].actions.len(), 3);
    assert_eq!(e.recordings[0].seed, 7);
}

#[test]
fn exhausted_ticks_stop_before_querying() {
    let p = Scripted::new(vec![reply(log_plan())]);
    let mut sim = sim_with_log(0);
    let r = run_subgoal(&env(&p, None, Limits::default()), &goal("log", 1), &mut sim, &mut Transcript::new()).unwrap();
    assert_eq!(r.outcome, SubgoalOutcome::StepLimit);
    assert_eq!(r.queries, 0);
}

#[test]
fn running_out_mid_action_is_a_step_limit() {
    let p = Scripted::new(vec![reply(log_plan())]);
    let mut sim = sim_with_log(1);
    let r = run_subgoal(&env(&p, None, Limits::default()), &goal("log", 1), &mut sim, &mut Transcript::new()).unwrap();
    assert_eq!(r.outcome, SubgoalOutcome::StepLimit);
    assert_eq!(r.queries, 1);
}

#[test]
fn provider_errors_propagate() {
    let mut sim = sim_with_log(1000);
    let r = run_subgoal(&env(&Failing, None, Limits::default()), &goal("log", 1), &mut sim, &mut Transcript::new());
    assert!(matches!(r, Err(Error::Provider(_))));
}

#[test]
fn transcript_file_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.jsonl");
    let p = Scripted::new(vec![reply(log_plan())]);
    let mut sim = sim_with_log(5000);
    let mut log = Transcript::to_file(&path).unwrap();
    run_subgoal(&env(&p, None, Limits::default()), &goal("log", 1), &mut sim, &mut log).unwrap();
    let in_memory = log.records().to_vec();
    drop(log);
    let back = blockmind::planner::transcript::read_transcript(&path).unwrap();
    assert_eq!(back, in_memory);
}
