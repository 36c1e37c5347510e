//! Experience collection: runs episodes with the current policies and
//! assembles per-agent, GAE-ready training batches over the discretized
//! action heads.

use super::net::{AdamState, LearnError, NetInput, PolicyParams};
use crate::posg::{AgentId, EnvError, Environment, EventKind, JointAction, Transition};
use crate::scenario::ScenarioParams;
use crate::sim::{Action, BirdviewObservation, IntersectionEnv};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CollectError {
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Learn(#[from] LearnError),
}

/// A policy network plus its optimizer state. One per agent: updates to one
/// handle never touch another.
#[derive(Debug, Clone)]
pub struct PolicyHandle {
    pub params: PolicyParams,
    pub adam: AdamState,
}

impl PolicyHandle {
    pub fn new(params: PolicyParams) -> Self {
        let adam = AdamState::new(params.param_count());
        PolicyHandle { params, adam }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActionSelect {
    Sample,
    Greedy,
}

/// Per-agent, per-episode outcome summary.
#[derive(Debug, Clone)]
pub struct EpisodeStats {
    pub agent: AgentId,
    pub undiscounted_return: f64,
    pub discounted_return: f64,
    pub completion: f64,
    pub collisions: usize,
    pub decisions: usize,
}

/// Everything one collection pass produced for one agent.
#[derive(Debug, Default)]
pub struct AgentBatch {
    pub transitions: Vec<Transition<BirdviewObservation, usize>>,
    /// Rewards with truncation bootstraps folded in (gamma * V(next)).
    pub gae_rewards: Vec<f64>,
    /// V(s_t) per transition plus one final bootstrap entry.
    pub values: Vec<f64>,
    pub dones: Vec<bool>,
}

#[derive(Debug, Default)]
pub struct CollectedBatch {
    pub agents: BTreeMap<AgentId, AgentBatch>,
    pub episodes: Vec<EpisodeStats>,
    /// Joint simulator decision steps executed.
    pub env_steps: u64,
}

impl CollectedBatch {
    /// All rollout-time value estimates, across agents, in collection order.
    pub fn all_values(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for batch in self.agents.values() {
            out.extend(batch.transitions.iter().map(|t| t.value_estimate));
        }
        out
    }

    /// Highest per-episode undiscounted return seen in this batch.
    pub fn max_episode_return(&self) -> Option<f64> {
        self.episodes
            .iter()
            .map(|e| e.undiscounted_return)
            .fold(None, |acc, r| Some(acc.map_or(r, |a: f64| a.max(r))))
    }
}

fn choose_action(
    params: &PolicyParams,
    obs: &BirdviewObservation,
    select: ActionSelect,
    rng: &mut ChaCha8Rng,
) -> Result<(usize, f64, f64), LearnError> {
    let trace = params.forward(&NetInput::from_observation(obs))?;
    let idx = match select {
        ActionSelect::Greedy => trace
            .log_probs
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .map(|(i, _)| i)
            .unwrap(),
        ActionSelect::Sample => {
            let u: f64 = rng.gen();
            let mut acc = 0.0;
            let mut chosen = trace.log_probs.len() - 1;
            for (i, lp) in trace.log_probs.iter().enumerate() {
                acc += lp.exp();
                if u < acc {
                    chosen = i;
                    break;
                }
            }
            chosen
        }
    };
    Ok((idx, trace.log_probs[idx], trace.value))
}

/// Runs one full episode on `params`, appending transitions and GAE arrays
/// per agent; returns the episode stats.
#[allow(clippy::too_many_arguments)]
fn run_episode(
    env: &mut IntersectionEnv,
    policies: &mut BTreeMap<AgentId, PolicyHandle>,
    scenario: &ScenarioParams,
    select: ActionSelect,
    gamma: f64,
    out: &mut CollectedBatch,
    max_decisions: usize,
    rng: &mut ChaCha8Rng,
) -> Result<(), CollectError> {
    let initial = env.reset(scenario)?;
    let mut current: BTreeMap<AgentId, Arc<BirdviewObservation>> = initial
        .into_iter()
        .map(|(k, v)| (k, Arc::new(v)))
        .collect();
    let mut returns: BTreeMap<AgentId, (f64, f64, f64, usize, usize)> = current
        .keys()
        .map(|k| (*k, (0.0, 0.0, 1.0, 0, 0)))
        .collect(); // (undiscounted, discounted, gamma^t, collisions, decisions)

    let mut decisions = 0usize;
    while !env.episode_over() && decisions < max_decisions {
        let active = env.active_agents();
        let mut joint: JointAction<Action> = BTreeMap::new();
        let mut picked: BTreeMap<AgentId, (usize, f64, f64)> = BTreeMap::new();
        for agent in &active {
            let handle = policies.get_mut(agent).expect("policy per agent");
            let (idx, log_prob, value) =
                choose_action(&handle.params, &current[agent], select, rng)?;
            joint.insert(*agent, env.discrete_to_action(*agent, idx)?);
            picked.insert(*agent, (idx, log_prob, value));
        }
        let result = env.step(&joint)?;
        decisions += 1;
        out.env_steps += 1;

        for agent in &active {
            let (idx, log_prob, value) = picked[agent];
            let next = Arc::new(result.observations[agent].clone());
            let reward = result.rewards[agent];
            let terminated = result.terminated[agent];
            let truncated = result.truncated[agent];
            let done = terminated || truncated;

            let stats = returns.get_mut(agent).expect("seen at reset");
            stats.0 += reward;
            stats.1 += stats.2 * reward;
            stats.2 *= gamma;
            stats.3 += result
                .events
                .iter()
                .filter(|e| e.kind == EventKind::Collision && e.agent == *agent)
                .count();
            stats.4 += 1;

            let agent_batch = out.agents.entry(*agent).or_default();
            let mut gae_reward = reward;
            if truncated {
                let handle = policies.get_mut(agent).expect("policy per agent");
                let v_next = handle
                    .params
                    .forward(&NetInput::from_observation(&next))?
                    .value;
                gae_reward += gamma * v_next;
            }
            agent_batch.transitions.push(Transition {
                observation: current[agent].clone(),
                action: idx,
                reward,
                next_observation: next.clone(),
                done,
                value_estimate: value,
                log_prob,
            });
            agent_batch.gae_rewards.push(gae_reward);
            agent_batch.values.push(value);
            agent_batch.dones.push(done);
            current.insert(*agent, next);
        }
    }

    for (agent, (undiscounted, discounted, _, collisions, dec)) in returns {
        out.episodes.push(EpisodeStats {
            agent,
            undiscounted_return: undiscounted,
            discounted_return: discounted,
            completion: env.completion_fraction(agent),
            collisions,
            decisions: dec,
        });
    }
    Ok(())
}

/// Collects at least `target` transitions per agent by running whole
/// episodes, then trims each agent's stream to exactly `target` and appends
/// the final bootstrap value. Episodes cut by the trim bootstrap from the
/// dropped transition's value estimate.
pub fn collect_batch(
    env: &mut IntersectionEnv,
    policies: &mut BTreeMap<AgentId, PolicyHandle>,
    mut next_scenario: impl FnMut(&mut ChaCha8Rng) -> ScenarioParams,
    target: usize,
    select: ActionSelect,
    gamma: f64,
    rng: &mut ChaCha8Rng,
) -> Result<CollectedBatch, CollectError> {
    assert!(target > 0);
    let mut out = CollectedBatch::default();
    loop {
        let have_all = !out.agents.is_empty()
            && policies
                .keys()
                .all(|a| out.agents.get(a).map(|b| b.transitions.len()).unwrap_or(0) >= target);
        if have_all {
            break;
        }
        let scenario = next_scenario(rng);
        run_episode(env, policies, &scenario, select, gamma, &mut out, usize::MAX, rng)?;
    }
    for batch in out.agents.values_mut() {
        if batch.transitions.len() > target {
            let cut_value = batch.values[target];
            batch.transitions.truncate(target);
            batch.gae_rewards.truncate(target);
            batch.dones.truncate(target);
            batch.values.truncate(target);
            batch.values.push(if batch.dones[target - 1] { 0.0 } else { cut_value });
        } else {
            // Ended exactly on an episode boundary.
            batch.values.push(0.0);
        }
    }
    Ok(out)
}

/// Single-episode collection used by evaluation and regret estimation.
pub fn collect_episode(
    env: &mut IntersectionEnv,
    policies: &mut BTreeMap<AgentId, PolicyHandle>,
    scenario: &ScenarioParams,
    select: ActionSelect,
    gamma: f64,
    rng: &mut ChaCha8Rng,
) -> Result<CollectedBatch, CollectError> {
    let mut out = CollectedBatch::default();
    run_episode(env, policies, scenario, select, gamma, &mut out, usize::MAX, rng)?;
    for batch in out.agents.values_mut() {
        batch.values.push(0.0);
    }
    Ok(out)
}
