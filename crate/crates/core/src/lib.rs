//! Scenario-based multi-agent driving curriculum engine.
//!
//! The crate is organized along the pipeline it implements:
//!
//! - [`scenario`]: a line-oriented partial-scenario description language,
//!   parameter schemas and a factored generator distribution to sample
//!   concrete scenario parameter vectors from.
//! - [`posg`]: the environment-facing contract (agents, joint actions, step
//!   results, transitions) shared by the simulator, the learner and the
//!   curriculum loop.
//! - [`sim`]: a deterministic 2D kinematic simulator of a signalized
//!   four-way intersection with three action abstractions, scripted
//!   background traffic and bird's-eye-view occupancy observations.
//! - [`learner`]: independent PPO with GAE over a small feed-forward
//!   policy/value network, implemented from first principles.
//! - [`curriculum`]: regret-prioritized level replay and regret-guided
//!   generator optimization, plus the domain-randomization baseline.

pub mod curriculum;
pub mod learner;
pub mod posg;
pub mod rng;
pub mod scenario;
pub mod sim;

pub use posg::{AgentId, Event, EventKind, StepResult, Transition};
pub use scenario::{GeneratorDistribution, ParamDomain, ParamValue, ScenarioParams, ScenarioSpec};
pub use sim::{Action, ActionSpaceKind, IntersectionEnv, RoadMap, WorldState};
