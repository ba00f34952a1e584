//! Deterministic voxel-world simulator plus a hierarchical agent engine.
//!
//! The pipeline is: [`knowledge`] builds goals from recipe and fact data,
//! [`decomposer`] expands them into a prerequisite tree and a post-order
//! schedule, [`planner`] runs the query/feedback loop against a
//! [`planner::PlanProvider`], and [`actions`] grounds each structured action
//! into world primitives. [`harness`] ties it together into episodes and suites.

pub mod actions;
pub mod decomposer;
pub mod error;
pub mod harness;
pub mod knowledge;
pub mod memory;
pub mod planner;
pub mod world;

pub use actions::{ActionResult, FailureReason, StructuredAction};
pub use decomposer::{decompose, schedule, SubGoalTree};
pub use error::{Error, Result};
pub use harness::{run_episode, EpisodeReport, TaskSpec};
pub use knowledge::{Goal, KnowledgeBase};
pub use memory::MemoryStore;
pub use world::{AgentState, Sim, World, WorldConfig};
