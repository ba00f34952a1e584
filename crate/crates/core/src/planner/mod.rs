//! The query, plan, execute and feedback loop for one sub-goal.

pub mod parse;
pub mod prompt;
pub mod remote;
pub mod rule;
pub mod transcript;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::actions::{execute, ActionResult, FailureReason, StateSummary, Status, StructuredAction};
use crate::error::Result;
use crate::knowledge::{Goal, KnowledgeBase};
use crate::memory::{goal_key, ActionSequence, MemoryStore};
use crate::world::Sim;

pub use parse::{parse_response, ParseError, PlanResponse};
pub use prompt::{instruction, render_query};
pub use remote::RemoteProvider;
pub use rule::RulePlanner;
pub use transcript::{Record, Transcript};

/// Default per-sub-goal query limit.
pub const MAX_QUERIES: u32 = 30;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    pub content: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeedbackMessage {
    pub outcome: Status,
    /// None when the previous response could not be used at all.
    pub action: Option<StructuredAction>,
    pub reason: Option<FailureReason>,
    pub detail: String,
    pub state: StateSummary,
}

/// Everything a query is rendered from.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryContext {
    pub goal: Goal,
    pub state: StateSummary,
    pub feedback: Option<FeedbackMessage>,
    pub reference_plan: Option<Vec<StructuredAction>>,
}

/// One provider call: the pinned instruction and the turns so far, ending
/// with the newest user query. `context` is the structured form of that query.
pub struct PlanRequest<'a> {
    pub instruction: &'a str,
    pub messages: &'a [Message],
    pub context: &'a QueryContext,
}

/// Produces a response text for a planning request.
pub trait PlanProvider: Sync {
    fn name(&self) -> &str;
    fn complete(&self, req: &PlanRequest) -> Result<String>;
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Limits {
    pub max_queries: u32,
    /// Hide failure details and state updates from follow-up queries.
    pub no_feedback: bool,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_queries: MAX_QUERIES,
            no_feedback: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubgoalOutcome {
    Achieved,
    QueryLimit,
    StepLimit,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubgoalReport {
    pub goal: Goal,
    pub outcome: SubgoalOutcome,
    pub queries: u32,
    /// Successfully executed actions in order.
    pub executed: Vec<StructuredAction>,
    pub skipped: bool,
}

impl SubgoalReport {
    pub fn achieved(&self) -> bool {
        self.outcome == SubgoalOutcome::Achieved
    }
}

/// Shared dependencies of the planning loop.
pub struct PlanEnv<'a> {
    pub kb: &'a KnowledgeBase,
    pub provider: &'a dyn PlanProvider,
    /// None disables both retrieval and recording.
    pub memory: Option<&'a MemoryStore>,
    pub limits: Limits,
    pub episode: String,
    pub seed: u64,
}

fn describe_delta(delta: &BTreeMap<String, i64>) -> String {
    if delta.is_empty() {
        return "the inventory did not change".into();
    }
    let parts: Vec<String> = delta.iter().map(|(k, v)| format!("{v:+} {k}")).collect();
    format!("the inventory changed by {}", parts.join(", "))
}

fn feedback_for(action: &StructuredAction, r: &ActionResult) -> FeedbackMessage {
    let detail = match r.reason {
        Some(reason) => format!("{} ({reason})", r.message),
        None => format!("{}, {}", r.message, describe_delta(&r.inventory_delta)),
    };
    FeedbackMessage {
        outcome: r.status,
        action: Some(action.clone()),
        reason: r.reason,
        detail,
        state: r.state.clone(),
    }
}

/// Keeps only the fact that something happened.
fn suppress(mut f: FeedbackMessage, first: &StateSummary) -> FeedbackMessage {
    f.reason = None;
    f.detail = "no details were reported".into();
    f.state = first.clone();
    f
}

/// Plans and executes until `goal` is in the inventory, the query limit is
/// used up, or the episode runs out of ticks.
pub fn run_subgoal(env: &PlanEnv, goal: &Goal, sim: &mut Sim, log: &mut Transcript) -> Result<SubgoalReport> {
    let name = goal.object.clone();
    let mut report = SubgoalReport {
        goal: goal.clone(),
        outcome: SubgoalOutcome::QueryLimit,
        queries: 0,
        executed: Vec::new(),
        skipped: false,
    };
    if goal.is_satisfied(&sim.agent.inventory) {
        log.push(Record::Subgoal { goal: name, count: goal.count, skipped: true });
        report.outcome = SubgoalOutcome::Achieved;
        report.skipped = true;
        return Ok(report);
    }
    log.push(Record::Subgoal { goal: name.clone(), count: goal.count, skipped: false });

    let key = goal_key(goal);
    let reference = env.memory.and_then(|m| m.retrieve(&key)).map(|s| s.actions);
    let instruction = prompt::instruction();
    let first_state = StateSummary::of(sim);
    let mut messages: Vec<Message> = Vec::new();
    let mut feedback: Option<FeedbackMessage> = None;
    let mut detail = String::from("query limit reached");

    'queries: while report.queries < env.limits.max_queries {
        if sim.ticks_left() == 0 {
            report.outcome = SubgoalOutcome::StepLimit;
            detail = "episode tick budget exhausted".into();
            break;
        }
        let state = if env.limits.no_feedback { first_state.clone() } else { StateSummary::of(sim) };
        let ctx = QueryContext {
            goal: goal.clone(),
            state,
            feedback: feedback.take().map(|f| {
                if env.limits.no_feedback {
                    suppress(f, &first_state)
                } else {
                    f
                }
            }),
            reference_plan: if messages.is_empty() { reference.clone() } else { None },
        };
        let text = render_query(&ctx);
        log.push(Record::Query { goal: name.clone(), index: report.queries, text: text.clone() });
        messages.push(Message { role: Role::User, content: text });
        let response = env.provider.complete(&PlanRequest {
            instruction: &instruction,
            messages: &messages,
            context: &ctx,
        })?;
        log.push(Record::Response { goal: name.clone(), index: report.queries, text: response.clone() });
        messages.push(Message { role: Role::Assistant, content: response.clone() });
        report.queries += 1;

        let plan = match parse_response(&response) {
            Ok(p) => p,
            Err(e) => {
                feedback = Some(FeedbackMessage {
                    outcome: Status::Failure,
                    action: None,
                    reason: None,
                    detail: e.description,
                    state: StateSummary::of(sim),
                });
                continue;
            }
        };
        if plan.action_list.is_empty() {
            feedback = Some(FeedbackMessage {
                outcome: Status::Failure,
                action: None,
                reason: None,
                detail: "the action list is empty".into(),
                state: StateSummary::of(sim),
            });
            continue;
        }
        let mut last = None;
        for a in &plan.action_list {
            let r = execute(sim, env.kb, a);
            log.push(Record::Execution { goal: name.clone(), action: a.clone(), result: r.clone() });
            if !r.succeeded() {
                if sim.ticks_left() == 0 {
                    report.outcome = SubgoalOutcome::StepLimit;
                    detail = "episode tick budget exhausted".into();
                    break 'queries;
                }
                feedback = Some(feedback_for(a, &r));
                last = None;
                break;
            }
            report.executed.push(a.clone());
            if goal.is_satisfied(&sim.agent.inventory) {
                report.outcome = SubgoalOutcome::Achieved;
                break 'queries;
            }
            last = Some(feedback_for(a, &r));
        }
        if last.is_some() {
            feedback = last;
        }
    }

    if report.achieved() {
        detail = format!("obtained {} {}", goal.count, goal.object);
        if let Some(m) = env.memory {
            let seq = ActionSequence::new(report.executed.clone(), env.episode.clone(), env.seed);
            if let Err(e) = m.record(&key, seq) {
                log::warn!("memory write failed: {e}");
            }
        }
    }
    log.push(Record::Outcome {
        goal: name,
        achieved: report.achieved(),
        queries: report.queries,
        detail,
    });
    Ok(report)
}
