//! Full simulator state and its canonical binary serialization.

use super::controller::{NpcBehaviorConfig, WaypointController};
use super::vehicle::{VehicleRole, VehicleState};
use super::ActionSpaceKind;
use crate::posg::AgentId;

/// How a vehicle's episode ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DoneKind {
    Terminated,
    Truncated,
}

/// A vehicle plus its per-episode controller state and bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct SimVehicle {
    pub state: VehicleState,
    pub npc_config: Option<NpcBehaviorConfig>,
    pub active: bool,
    pub done: Option<DoneKind>,
    /// Lateral deviation from the assigned route at the last tick, meters.
    pub lateral: f64,
    /// Route progress at spawn; completion is measured from here.
    pub spawn_progress: f64,
    pub controller: WaypointController,
}

impl SimVehicle {
    pub fn new(state: VehicleState, npc_config: Option<NpcBehaviorConfig>) -> Self {
        let spawn_progress = state.route_progress;
        SimVehicle {
            state,
            npc_config,
            active: true,
            done: None,
            lateral: 0.0,
            spawn_progress,
            controller: WaypointController::new(),
        }
    }

    pub fn agent_id(&self) -> Option<AgentId> {
        match self.state.role {
            VehicleRole::Controlled(id) => Some(id),
            VehicleRole::Npc => None,
        }
    }
}

/// Everything the simulator evolves: vehicles, the tick counter, the signal
/// phase offset and the all-stopped streak that feeds deadlock detection.
#[derive(Debug, Clone, PartialEq)]
pub struct WorldState {
    pub vehicles: Vec<SimVehicle>,
    pub tick: u32,
    /// Seconds added to the signal clock, sampled from the scenario seed.
    pub signal_offset: f64,
    pub low_speed_streak: u32,
    pub action_space: ActionSpaceKind,
}

impl WorldState {
    pub fn sim_time(&self) -> f64 {
        f64::from(self.tick) * super::vehicle::TICK_SECONDS
    }

    pub fn signal_time(&self) -> f64 {
        self.signal_offset + self.sim_time()
    }

    /// Canonical little-endian byte form of the dynamic state, used by
    /// determinism tests. Controller internals are excluded: they are
    /// derived per-episode machinery, not world state.
    pub fn to_canonical_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(64 + self.vehicles.len() * 96);
        out.extend_from_slice(&1u32.to_le_bytes());
        out.extend_from_slice(&self.tick.to_le_bytes());
        out.extend_from_slice(&self.signal_offset.to_le_bytes());
        out.extend_from_slice(&self.low_speed_streak.to_le_bytes());
        out.push(match self.action_space {
            ActionSpaceKind::Continuous => 0,
            ActionSpaceKind::Waypoint => 1,
            ActionSpaceKind::Macro => 2,
        });
        out.extend_from_slice(&(self.vehicles.len() as u32).to_le_bytes());
        for v in &self.vehicles {
            match v.state.role {
                VehicleRole::Controlled(AgentId(i)) => {
                    out.push(0);
                    out.push(i);
                }
                VehicleRole::Npc => {
                    out.push(1);
                    out.push(0);
                }
            }
            for value in [
                v.state.position.x,
                v.state.position.y,
                v.state.heading,
                v.state.speed,
                v.state.route_progress,
            ] {
                out.extend_from_slice(&value.to_le_bytes());
            }
            let route = v.state.route.as_bytes();
            out.extend_from_slice(&(route.len() as u16).to_le_bytes());
            out.extend_from_slice(route);
            out.push(u8::from(v.active));
            out.push(match v.done {
                None => 0,
                Some(DoneKind::Terminated) => 1,
                Some(DoneKind::Truncated) => 2,
            });
        }
        out
    }
}
