//! Coverage path planning with LLM-proposed waypoints.
//!
//! The pipeline has three layers. A planner (an LLM behind a chat provider,
//! or one of the deterministic pattern generators) proposes a grid-cell
//! waypoint list. An evaluator scores it on coverage, length, and turns and
//! accepts or rejects it; rejected proposals are re-prompted with feedback.
//! Accepted paths are driven by a simulated differential-drive robot with a
//! waypoint follower and a forward-looking safety stop. The harness wraps
//! the whole thing in seeded, reproducible episode batches and reports the
//! coverage-weighted path-length score alongside the raw metrics.
//!
//! Algorithm variants sit behind name-indexed registries: planning
//! strategies (`lawnmower`, `spiral`, `square`, `wallmow`, `llm`) behind
//! [`planner::PathPlanner`], chat providers (`openai`, `gemini`,
//! `anthropic`, `scripted`) behind [`llm::ChatProvider`], and waypoint
//! followers (`turn_and_drive`, `dog_curve`) behind
//! [`nav::FollowerMethod`].

pub mod grid;
pub mod harness;
pub mod llm;
pub mod metrics;
pub mod nav;
pub mod patterns;
pub mod planner;
pub mod sim;

pub use grid::{parse_map, CellCoord, GridMap, WaypointPath};
pub use metrics::{EvaluationReport, Thresholds};
pub use planner::{PlanOutcome, PlannerConfig, PlannerRegistry};
