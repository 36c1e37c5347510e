//! Bounded level buffer with rank- and staleness-prioritized replay.

use crate::scenario::ScenarioParams;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use std::io::{self, Write};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BufferError {
    #[error("cannot sample from an empty buffer")]
    Empty,
    #[error("regret scores must be non-negative and finite, got {0}")]
    BadScore(f64),
}

/// One stored scenario with its replay bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct BufferEntry {
    pub params: ScenarioParams,
    pub regret_score: f64,
    pub last_sampled_step: u64,
    pub insert_step: u64,
    /// Highest episodic return observed for this exact scenario.
    pub max_return_seen: f64,
}

/// Bounded store of scenarios sampled with probability mixing a regret-rank
/// term and a staleness term.
#[derive(Debug, Clone)]
pub struct LevelBuffer {
    entries: Vec<BufferEntry>,
    pub capacity: usize,
    /// Rank-prioritization temperature (beta).
    pub temperature: f64,
    /// Staleness mixing coefficient (rho).
    pub staleness_mix: f64,
    /// Rank prioritization when true, proportional-to-score otherwise.
    pub rank_prioritized: bool,
}

impl LevelBuffer {
    pub fn new(capacity: usize) -> Self {
        LevelBuffer {
            capacity,
            temperature: 0.3,
            staleness_mix: 0.3,
            rank_prioritized: true,
            entries: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[BufferEntry] {
        &self.entries
    }

    pub fn entry_mut(&mut self, params: &ScenarioParams) -> Option<&mut BufferEntry> {
        self.entries.iter_mut().find(|e| &e.params == params)
    }

    pub fn mean_regret(&self) -> f64 {
        if self.entries.is_empty() {
            return 0.0;
        }
        self.entries.iter().map(|e| e.regret_score).sum::<f64>() / self.entries.len() as f64
    }

    /// Inserts a scenario with its regret score. Duplicates (same assignment
    /// and seed) keep one entry with the maximum score. At capacity, the
    /// entry with the lowest score (oldest on ties) is evicted, and
    /// inserting strictly below that minimum is a no-op.
    pub fn insert(
        &mut self,
        params: ScenarioParams,
        regret: f64,
        step: u64,
    ) -> Result<(), BufferError> {
        if !regret.is_finite() || regret < 0.0 {
            return Err(BufferError::BadScore(regret));
        }
        if let Some(entry) = self.entry_mut(&params) {
            entry.regret_score = entry.regret_score.max(regret);
            return Ok(());
        }
        if self.entries.len() >= self.capacity {
            let evict = self
                .entries
                .iter()
                .enumerate()
                .min_by(|(_, a), (_, b)| {
                    a.regret_score
                        .partial_cmp(&b.regret_score)
                        .unwrap()
                        .then(a.insert_step.cmp(&b.insert_step))
                })
                .map(|(i, e)| (i, e.regret_score))
                .expect("non-empty at capacity");
            if regret <= evict.1 {
                return Ok(());
            }
            self.entries.swap_remove(evict.0);
        }
        self.entries.push(BufferEntry {
            params,
            regret_score: regret,
            last_sampled_step: step,
            insert_step: step,
            max_return_seen: 0.0,
        });
        Ok(())
    }

    /// Records an observed episodic return for a stored scenario; the stored
    /// maximum never decreases.
    pub fn record_return(&mut self, params: &ScenarioParams, episodic_return: f64) {
        if let Some(entry) = self.entry_mut(params) {
            entry.max_return_seen = entry.max_return_seen.max(episodic_return);
        }
    }

    /// Replay weights at `current_step`:
    /// `(1 - rho) * P_rank + rho * P_stale`, where `P_rank(i)` is
    /// proportional to `(1/rank_i)^(1/beta)` with ranks by descending regret
    /// and `P_stale(i)` proportional to steps since the entry was last
    /// sampled.
    pub fn sampling_weights(&self, current_step: u64) -> Vec<f64> {
        let n = self.entries.len();
        if n == 0 {
            return Vec::new();
        }

        let score_term: Vec<f64> = if self.rank_prioritized {
            // Stable rank: regret descending, older inserts first on ties.
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| {
                self.entries[b]
                    .regret_score
                    .partial_cmp(&self.entries[a].regret_score)
                    .unwrap()
                    .then(self.entries[a].insert_step.cmp(&self.entries[b].insert_step))
                    .then(a.cmp(&b))
            });
            let mut w = vec![0.0; n];
            for (rank0, idx) in order.into_iter().enumerate() {
                w[idx] = (1.0 / (rank0 + 1) as f64).powf(1.0 / self.temperature);
            }
            w
        } else {
            self.entries.iter().map(|e| e.regret_score).collect()
        };
        let rank_sum: f64 = score_term.iter().sum();
        let p_rank: Vec<f64> = if rank_sum > 0.0 {
            score_term.iter().map(|w| w / rank_sum).collect()
        } else {
            vec![1.0 / n as f64; n]
        };

        let staleness: Vec<f64> = self
            .entries
            .iter()
            .map(|e| current_step.saturating_sub(e.last_sampled_step) as f64)
            .collect();
        let stale_sum: f64 = staleness.iter().sum();
        let p_stale: Vec<f64> = if stale_sum > 0.0 {
            staleness.iter().map(|s| s / stale_sum).collect()
        } else {
            vec![1.0 / n as f64; n]
        };

        p_rank
            .iter()
            .zip(&p_stale)
            .map(|(r, s)| (1.0 - self.staleness_mix) * r + self.staleness_mix * s)
            .collect()
    }

    /// Samples a replay scenario and refreshes its staleness clock.
    pub fn sample(
        &mut self,
        current_step: u64,
        rng: &mut ChaCha8Rng,
    ) -> Result<ScenarioParams, BufferError> {
        if self.entries.is_empty() {
            return Err(BufferError::Empty);
        }
        let weights = self.sampling_weights(current_step);
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        let mut chosen = self.entries.len() - 1;
        for (i, w) in weights.iter().enumerate() {
            acc += w;
            if u < acc {
                chosen = i;
                break;
            }
        }
        self.entries[chosen].last_sampled_step = current_step;
        Ok(self.entries[chosen].params.clone())
    }

    /// CSV snapshot: assignment, seed, regret and the replay bookkeeping.
    pub fn write_snapshot_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(
            w,
            "assignment,seed,regret,last_sampled_step,insert_step,max_return_seen"
        )?;
        for e in &self.entries {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                e.params.format_assignment(),
                e.params.seed,
                e.regret_score,
                e.last_sampled_step,
                e.insert_step,
                e.max_return_seen
            )?;
        }
        Ok(())
    }
}
