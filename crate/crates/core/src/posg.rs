//! Environment-facing contract shared by the simulator, learner and
//! curriculum: agents, joint actions, step results, transitions and the
//! generic rollout loop.

use crate::scenario::ScenarioParams;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::sync::Arc;
use thiserror::Error;

/// Stable per-episode agent identity (small index).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AgentId(pub u8);

impl std::fmt::Display for AgentId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "agent{}", self.0)
    }
}

/// Actions for exactly the currently active agents.
pub type JointAction<A> = BTreeMap<AgentId, A>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EventKind {
    Collision,
    RouteComplete,
    OffRoute,
    Timeout,
    Deadlock,
}

impl std::fmt::Display for EventKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            EventKind::Collision => "collision",
            EventKind::RouteComplete => "route_complete",
            EventKind::OffRoute => "off_route",
            EventKind::Timeout => "timeout",
            EventKind::Deadlock => "deadlock",
        };
        write!(f, "{s}")
    }
}

/// A traffic event attributed to a controlled agent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub kind: EventKind,
    pub agent: AgentId,
    pub sim_time: f64,
}

/// Per-agent outcome of one decision step.
#[derive(Debug, Clone)]
pub struct StepResult<O> {
    pub observations: BTreeMap<AgentId, O>,
    pub rewards: BTreeMap<AgentId, f64>,
    pub terminated: BTreeMap<AgentId, bool>,
    pub truncated: BTreeMap<AgentId, bool>,
    pub events: Vec<Event>,
}

impl<O> StepResult<O> {
    /// Terminal or truncated this step.
    pub fn done(&self, agent: AgentId) -> bool {
        self.terminated.get(&agent).copied().unwrap_or(false)
            || self.truncated.get(&agent).copied().unwrap_or(false)
    }
}

/// One step of experience as collected for policy optimization.
#[derive(Debug, Clone)]
pub struct Transition<O, A> {
    pub observation: Arc<O>,
    pub action: A,
    pub reward: f64,
    pub next_observation: Arc<O>,
    pub done: bool,
    /// Value head output at collection time.
    pub value_estimate: f64,
    pub log_prob: f64,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnvError {
    #[error("unknown map `{0}`")]
    UnknownMap(String),
    #[error("scenario parameters invalid: {0}")]
    BadParams(String),
    #[error("step called before reset")]
    ResetRequired,
    #[error("step after episode end")]
    EpisodeOver,
    #[error("missing action for {0}")]
    MissingAction(AgentId),
    #[error("action provided for non-active {0}")]
    ActionForInactiveAgent(AgentId),
    #[error("action variant does not match the configured action space")]
    ActionKindMismatch,
    #[error("scenario spec invalid for this environment: {0}")]
    BadSpec(String),
}

/// The underspecified-game contract the simulator implements: scenario
/// parameters select dynamics and the agent set at reset time.
pub trait Environment {
    type Obs;
    type Act;

    /// Starts an episode fully determined by `params` (assignment and seed).
    fn reset(&mut self, params: &ScenarioParams) -> Result<BTreeMap<AgentId, Self::Obs>, EnvError>;

    /// Advances exactly one decision step for all active agents.
    fn step(&mut self, joint: &JointAction<Self::Act>) -> Result<StepResult<Self::Obs>, EnvError>;

    /// Agents that are neither terminated nor truncated.
    fn active_agents(&self) -> Vec<AgentId>;

    fn episode_over(&self) -> bool;
}

/// What a policy returns for one observation.
#[derive(Debug, Clone)]
pub struct PolicyDecision<A> {
    pub action: A,
    pub log_prob: f64,
    pub value: f64,
}

/// A per-agent decision rule. Implementations must be deterministic given
/// the rng stream.
pub trait AgentPolicy<O, A> {
    fn act(&mut self, obs: &O, rng: &mut ChaCha8Rng) -> PolicyDecision<A>;

    /// Value estimate without acting; used to bootstrap truncated episodes.
    fn value(&mut self, obs: &O) -> f64 {
        let _ = obs;
        0.0
    }
}

/// Everything one episode produced.
pub struct RolloutOutcome<O, A> {
    pub transitions: BTreeMap<AgentId, Vec<Transition<O, A>>>,
    /// Value of the final observation for agents whose episode was cut by
    /// truncation (zero when terminated).
    pub bootstrap_values: BTreeMap<AgentId, f64>,
    pub events: Vec<Event>,
    /// Decision steps executed.
    pub steps: usize,
}

/// Runs one episode (or `max_steps` decisions, whichever first) with one
/// policy per agent. Deterministic given params, policy state and rng seed.
pub fn rollout<E, O, A, P>(
    env: &mut E,
    policies: &mut BTreeMap<AgentId, P>,
    params: &ScenarioParams,
    max_steps: usize,
    rng: &mut ChaCha8Rng,
) -> Result<RolloutOutcome<O, A>, EnvError>
where
    E: Environment<Obs = O, Act = A>,
    A: Clone,
    P: AgentPolicy<O, A>,
{
    assert!(max_steps > 0, "rollout needs a positive step budget");
    let initial = env.reset(params)?;
    let mut current: BTreeMap<AgentId, Arc<O>> =
        initial.into_iter().map(|(k, v)| (k, Arc::new(v))).collect();

    let mut transitions: BTreeMap<AgentId, Vec<Transition<O, A>>> = BTreeMap::new();
    let mut bootstrap_values: BTreeMap<AgentId, f64> = BTreeMap::new();
    let mut events = Vec::new();
    for agent in current.keys() {
        transitions.insert(*agent, Vec::new());
        bootstrap_values.insert(*agent, 0.0);
    }

    let mut steps = 0usize;
    while steps < max_steps && !env.episode_over() {
        let active = env.active_agents();
        let mut joint: JointAction<A> = BTreeMap::new();
        let mut decisions: BTreeMap<AgentId, PolicyDecision<A>> = BTreeMap::new();
        for agent in &active {
            let obs = current.get(agent).expect("active agent has an observation");
            let policy = policies.get_mut(agent).expect("policy per agent");
            let decision = policy.act(obs, rng);
            joint.insert(*agent, decision.action.clone());
            decisions.insert(*agent, decision);
        }
        let result = env.step(&joint)?;
        events.extend(result.events.iter().copied());
        for agent in &active {
            let next = Arc::new(
                result
                    .observations
                    .get(agent)
                    .cloned()
                    .expect("step reports every acting agent"),
            );
            let decision = decisions.remove(agent).expect("collected above");
            let done = result.done(*agent);
            transitions.get_mut(agent).expect("seen at reset").push(Transition {
                observation: current[agent].clone(),
                action: decision.action,
                reward: result.rewards[agent],
                next_observation: next.clone(),
                done,
                value_estimate: decision.value,
                log_prob: decision.log_prob,
            });
            if result.truncated.get(agent).copied().unwrap_or(false) {
                let policy = policies.get_mut(agent).expect("policy per agent");
                bootstrap_values.insert(*agent, policy.value(&next));
            }
            current.insert(*agent, next);
        }
        steps += 1;
    }

    // Episode cut by the step budget: bootstrap every still-active agent.
    if !env.episode_over() {
        for agent in env.active_agents() {
            let policy = policies.get_mut(&agent).expect("policy per agent");
            let v = policy.value(&current[&agent]);
            bootstrap_values.insert(agent, v);
        }
    }

    Ok(RolloutOutcome {
        transitions,
        bootstrap_values,
        events,
        steps,
    })
}
