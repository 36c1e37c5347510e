//! Route-progress plus clamped cruise-speed reward.

use super::vehicle::VehicleState;

/// Per-tick reward: progress made along the route since the previous state
/// plus `min(v / v_target, 1)`.
pub fn compute_reward(prev: &VehicleState, cur: &VehicleState, v_target: f64) -> f64 {
    debug_assert!(v_target > 0.0);
    (cur.route_progress - prev.route_progress) + (cur.speed / v_target).min(1.0)
}

/// Aggregates one decision's ticks into one reward: the progress term
/// telescopes, the cruise term is averaged over the persisted ticks. Keeps
/// reward scale comparable across action spaces with different persistence.
#[derive(Debug, Clone, Default)]
pub struct DecisionReward {
    progress: f64,
    cruise_sum: f64,
    ticks: u32,
}

impl DecisionReward {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_tick(&mut self, prev: &VehicleState, cur: &VehicleState, v_target: f64) {
        self.progress += cur.route_progress - prev.route_progress;
        self.cruise_sum += (cur.speed / v_target).min(1.0);
        self.ticks += 1;
    }

    pub fn total(&self) -> f64 {
        if self.ticks == 0 {
            return 0.0;
        }
        self.progress + self.cruise_sum / f64::from(self.ticks)
    }
}
