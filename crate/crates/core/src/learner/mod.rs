//! Independent PPO over birdview observations: a small feed-forward network
//! with hand-written gradients, GAE, clipped-surrogate updates, experience
//! collection, greedy evaluation and binary checkpoints.

mod checkpoint;
mod collect;
mod eval;
mod gae;
mod net;
mod ppo;

pub use checkpoint::{load_checkpoint, save_checkpoint};
pub use collect::{
    collect_batch, collect_episode, ActionSelect, AgentBatch, CollectError, CollectedBatch,
    EpisodeStats, PolicyHandle,
};
pub use eval::{evaluate_policy, ReturnStats};
pub use gae::compute_gae;
pub use net::{
    policy_forward, AdamState, ForwardTrace, LearnError, NetConfig, NetInput, PolicyParams,
    EGO_FEATURE_SCALE,
};
pub use ppo::{
    normalize_advantages, ppo_loss_and_grad, ppo_update, LossDiagnostics, PpoConfig,
    PreparedSample, SampleBatch,
};

use crate::posg::AgentId;
use std::collections::BTreeMap;

/// Runs one PPO update for every agent from a collected batch. Each agent
/// trains strictly on its own transitions with its own optimizer state.
pub fn update_agents(
    policies: &mut BTreeMap<AgentId, PolicyHandle>,
    batch: &CollectedBatch,
    cfg: &PpoConfig,
    rng: &mut rand_chacha::ChaCha8Rng,
) -> Result<BTreeMap<AgentId, LossDiagnostics>, CollectError> {
    let mut out = BTreeMap::new();
    for (agent, handle) in policies.iter_mut() {
        let Some(data) = batch.agents.get(agent) else {
            continue;
        };
        let mut sample_batch = SampleBatch::prepare(
            data.transitions.iter().map(|t| t.observation.clone()).collect(),
            data.transitions.iter().map(|t| t.action).collect(),
            data.transitions.iter().map(|t| t.log_prob).collect(),
            &data.gae_rewards,
            &data.values,
            &data.dones,
            cfg.gamma,
            cfg.gae_lambda,
        )?;
        let diag = ppo_update(&mut handle.params, &mut handle.adam, &mut sample_batch, cfg, rng)?;
        out.insert(*agent, diag);
    }
    Ok(out)
}
