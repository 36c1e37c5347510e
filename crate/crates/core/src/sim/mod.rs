//! Deterministic 2D kinematic simulator of a signalized four-way
//! intersection implementing the environment contract: three action
//! abstractions with different persistence, scripted background traffic
//! bound to scenario knobs, birdview observations and traffic events.

pub mod birdview;
pub mod controller;
pub mod events;
pub mod geometry;
pub mod map;
pub mod reward;
pub mod trace;
pub mod vehicle;
pub mod world;

pub use birdview::{rasterize_birdview, BirdviewObservation, Channel};
pub use controller::{MacroCommand, NpcBehaviorConfig};
pub use map::{Approach, Maneuver, RoadMap};
pub use world::{DoneKind, WorldState};

use crate::posg::{AgentId, EnvError, Environment, Event, EventKind, JointAction, StepResult};
use crate::rng::stream;
use crate::scenario::{DomainKind, ParamValue, ScenarioParams, ScenarioSpec};
use controller::{macro_control, npc_control, TrafficActor, TrafficView, WaypointController};
use geometry::Vec2;
use map::Route;
use rand::seq::SliceRandom;
use rand::Rng;
use std::collections::BTreeMap;
use std::sync::Arc;
use trace::TraceRow;
use vehicle::{advance_kinematics, VehicleRole, VehicleState, TICK_SECONDS, VEHICLE_LENGTH};
use world::SimVehicle;

/// The three action abstractions and how many physics ticks one decision
/// persists for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ActionSpaceKind {
    Continuous,
    Waypoint,
    Macro,
}

impl ActionSpaceKind {
    pub fn persistence(&self) -> u32 {
        match self {
            ActionSpaceKind::Continuous => 2,
            ActionSpaceKind::Waypoint => 5,
            ActionSpaceKind::Macro => 10,
        }
    }

    /// Size of the discretized action head for this abstraction.
    pub fn n_actions(&self) -> usize {
        match self {
            ActionSpaceKind::Continuous => THROTTLE_BINS * STEER_BINS,
            ActionSpaceKind::Waypoint => WAYPOINT_CANDIDATES,
            ActionSpaceKind::Macro => MacroCommand::ALL.len(),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            ActionSpaceKind::Continuous => "continuous",
            ActionSpaceKind::Waypoint => "waypoint",
            ActionSpaceKind::Macro => "macro",
        }
    }

    pub fn from_str(s: &str) -> Option<Self> {
        match s {
            "continuous" => Some(ActionSpaceKind::Continuous),
            "waypoint" => Some(ActionSpaceKind::Waypoint),
            "macro" => Some(ActionSpaceKind::Macro),
            _ => None,
        }
    }
}

pub const THROTTLE_BINS: usize = 9;
pub const STEER_BINS: usize = 9;
pub const WAYPOINT_CANDIDATES: usize = 7;
/// Waypoint targets must stay within this range of the vehicle.
pub const WAYPOINT_RANGE: f64 = 20.0;

/// One agent decision.
#[derive(Debug, Clone, PartialEq)]
pub enum Action {
    Continuous { throttle: f64, steer: f64 },
    Waypoint { target: Vec2 },
    Macro { command: MacroCommand },
}

impl Action {
    fn kind(&self) -> ActionSpaceKind {
        match self {
            Action::Continuous { .. } => ActionSpaceKind::Continuous,
            Action::Waypoint { .. } => ActionSpaceKind::Waypoint,
            Action::Macro { .. } => ActionSpaceKind::Macro,
        }
    }
}

/// Simulator configuration that is not part of a scenario.
#[derive(Debug, Clone)]
pub struct EnvConfig {
    pub action_space: ActionSpaceKind,
    /// Cruise target for controlled agents (reward and controllers), m/s.
    pub cruise_speed: f64,
    /// Episode cap in physics ticks.
    pub horizon_ticks: u32,
    pub record_trace: bool,
}

impl Default for EnvConfig {
    fn default() -> Self {
        EnvConfig {
            action_space: ActionSpaceKind::Macro,
            cruise_speed: 8.0,
            horizon_ticks: 400,
            record_trace: false,
        }
    }
}

/// Simulator behavior knobs a scenario spec may bind parameters to.
const KNOB_ROUTE: &str = "route";
const KNOB_NPC_COUNT: &str = "npc_count";
const KNOB_NPC_TARGET_SPEED: &str = "npc_target_speed";
const KNOB_KEEPS_SAFETY_DISTANCE: &str = "keeps_safety_distance";
const KNOB_RESPECTS_TRAFFIC_LIGHTS: &str = "respects_traffic_lights";
/// Route knobs for additional controlled agents.
const EXTRA_ROUTE_KNOBS: [&str; 3] = ["route_1", "route_2", "route_3"];

/// The intersection simulator. One instance serves one caller; create more
/// instances for parallel rollouts.
pub struct IntersectionEnv {
    map: Arc<RoadMap>,
    spec: ScenarioSpec,
    cfg: EnvConfig,
    n_controlled: usize,
    world: Option<WorldState>,
    episode_over: bool,
    trace_rows: Vec<TraceRow>,
}

impl IntersectionEnv {
    pub fn new(map: Arc<RoadMap>, spec: ScenarioSpec, cfg: EnvConfig) -> Result<Self, EnvError> {
        let mut n_controlled = 1;
        for binding in &spec.bindings {
            let domain = spec
                .param(&binding.param)
                .expect("parser guarantees bound params exist");
            let knob = binding.knob.as_str();
            let route_knob = knob == KNOB_ROUTE || EXTRA_ROUTE_KNOBS.contains(&knob);
            match knob {
                k if route_knob => {
                    let DomainKind::Categorical(values) = &domain.kind else {
                        return Err(EnvError::BadSpec(format!("knob {k} needs a categorical parameter")));
                    };
                    for v in values {
                        if map::Maneuver::from_str(v).is_none() {
                            return Err(EnvError::BadSpec(format!(
                                "route value `{v}` is not a maneuver"
                            )));
                        }
                    }
                }
                KNOB_NPC_COUNT => {
                    let DomainKind::IntegerRange { lo, .. } = domain.kind else {
                        return Err(EnvError::BadSpec("npc_count needs an integer parameter".into()));
                    };
                    if lo < 0 {
                        return Err(EnvError::BadSpec("npc_count cannot be negative".into()));
                    }
                }
                KNOB_NPC_TARGET_SPEED => match domain.kind {
                    DomainKind::RealRange { lo, hi } | DomainKind::IntegerRange { lo: _, hi: _ }
                        if matches!(domain.kind, DomainKind::RealRange { .. }) =>
                    {
                        if lo <= 0.0 || hi > vehicle::V_MAX {
                            return Err(EnvError::BadSpec(format!(
                                "npc_target_speed must lie in (0, {}]",
                                vehicle::V_MAX
                            )));
                        }
                    }
                    DomainKind::IntegerRange { lo, hi } => {
                        if lo <= 0 || (hi as f64) > vehicle::V_MAX {
                            return Err(EnvError::BadSpec(format!(
                                "npc_target_speed must lie in (0, {}]",
                                vehicle::V_MAX
                            )));
                        }
                    }
                    _ => {
                        return Err(EnvError::BadSpec(
                            "npc_target_speed needs a numeric parameter".into(),
                        ))
                    }
                },
                KNOB_KEEPS_SAFETY_DISTANCE | KNOB_RESPECTS_TRAFFIC_LIGHTS => {
                    if domain.kind != DomainKind::Boolean {
                        return Err(EnvError::BadSpec(format!("knob {knob} needs a boolean parameter")));
                    }
                }
                other => return Err(EnvError::BadSpec(format!("unknown behavior knob `{other}`"))),
            }
        }
        for (i, knob) in EXTRA_ROUTE_KNOBS.iter().enumerate() {
            if spec.bindings.iter().any(|b| b.knob == *knob) {
                n_controlled = n_controlled.max(i + 2);
            }
        }
        Ok(IntersectionEnv {
            map,
            spec,
            cfg,
            n_controlled,
            world: None,
            episode_over: true,
            trace_rows: Vec::new(),
        })
    }

    pub fn map(&self) -> &RoadMap {
        &self.map
    }

    pub fn spec(&self) -> &ScenarioSpec {
        &self.spec
    }

    pub fn config(&self) -> &EnvConfig {
        &self.cfg
    }

    pub fn n_controlled(&self) -> usize {
        self.n_controlled
    }

    pub fn world_state(&self) -> Option<&WorldState> {
        self.world.as_ref()
    }

    /// Trace rows recorded since the last reset (when enabled).
    pub fn take_trace(&mut self) -> Vec<TraceRow> {
        std::mem::take(&mut self.trace_rows)
    }

    fn knob_value<'a>(&'a self, params: &'a ScenarioParams, knob: &str) -> Option<&'a ParamValue> {
        self.spec
            .bound_param(knob)
            .and_then(|name| params.assignment.get(name))
    }

    fn maneuver_for_agent(&self, params: &ScenarioParams, agent: usize) -> Maneuver {
        let knob = if agent == 0 {
            KNOB_ROUTE
        } else {
            EXTRA_ROUTE_KNOBS[agent - 1]
        };
        self.knob_value(params, knob)
            .and_then(|v| v.as_symbol())
            .and_then(Maneuver::from_str)
            .unwrap_or(Maneuver::Straight)
    }

    fn npc_config_for(&self, params: &ScenarioParams) -> NpcBehaviorConfig {
        let mut cfg = NpcBehaviorConfig::default();
        if let Some(v) = self.knob_value(params, KNOB_NPC_TARGET_SPEED).and_then(|v| v.as_real()) {
            cfg.target_speed = v.clamp(0.5, vehicle::V_MAX);
        }
        if let Some(v) = self
            .knob_value(params, KNOB_KEEPS_SAFETY_DISTANCE)
            .and_then(|v| v.as_bool())
        {
            cfg.keeps_safety_distance = v;
        }
        if let Some(v) = self
            .knob_value(params, KNOB_RESPECTS_TRAFFIC_LIGHTS)
            .and_then(|v| v.as_bool())
        {
            cfg.respects_traffic_lights = v;
        }
        cfg
    }

    fn route_of(&self, v: &VehicleState) -> &Route {
        self.map.route(&v.route).expect("vehicle routes exist on the map")
    }

    /// Fraction of the spawn-to-goal stretch covered; 1.0 once the route
    /// completes within its margin.
    pub fn completion_fraction(&self, agent: AgentId) -> f64 {
        let Some(world) = &self.world else { return 0.0 };
        let Some(v) = world.vehicles.iter().find(|v| v.agent_id() == Some(agent)) else {
            return 0.0;
        };
        let route = self.route_of(&v.state);
        let goal = route.path.length() - events::ROUTE_COMPLETE_MARGIN;
        let span = goal - v.spawn_progress;
        if span <= 0.0 {
            return 1.0;
        }
        ((v.state.route_progress - v.spawn_progress) / span).clamp(0.0, 1.0)
    }

    /// Translates a discrete action-head index into a concrete action for
    /// `agent`, given its current route state.
    pub fn discrete_to_action(&self, agent: AgentId, index: usize) -> Result<Action, EnvError> {
        match self.cfg.action_space {
            ActionSpaceKind::Continuous => {
                if index >= THROTTLE_BINS * STEER_BINS {
                    return Err(EnvError::ActionKindMismatch);
                }
                let t = index / STEER_BINS;
                let s = index % STEER_BINS;
                let step = 2.0 / (THROTTLE_BINS - 1) as f64;
                Ok(Action::Continuous {
                    throttle: -1.0 + step * t as f64,
                    steer: -1.0 + step * s as f64,
                })
            }
            ActionSpaceKind::Waypoint => {
                let candidates = self.waypoint_candidates(agent)?;
                candidates
                    .get(index)
                    .copied()
                    .map(|target| Action::Waypoint { target })
                    .ok_or(EnvError::ActionKindMismatch)
            }
            ActionSpaceKind::Macro => MacroCommand::ALL
                .get(index)
                .copied()
                .map(|command| Action::Macro { command })
                .ok_or(EnvError::ActionKindMismatch),
        }
    }

    /// The seven waypoint candidates for `agent`: three lookaheads along the
    /// assigned route plus lateral offsets around the middle one.
    pub fn waypoint_candidates(&self, agent: AgentId) -> Result<[Vec2; WAYPOINT_CANDIDATES], EnvError> {
        let world = self.world.as_ref().ok_or(EnvError::ResetRequired)?;
        let v = world
            .vehicles
            .iter()
            .find(|v| v.agent_id() == Some(agent))
            .ok_or(EnvError::ActionForInactiveAgent(agent))?;
        let route = self.route_of(&v.state);
        let s = v.state.route_progress;
        let (ahead3, _) = route.path.point_at(s + 3.0);
        let (ahead6, h6) = route.path.point_at(s + 6.0);
        let (ahead10, _) = route.path.point_at(s + 10.0);
        let left = Vec2::unit_from_angle(h6).perp();
        Ok([
            ahead3,
            ahead6,
            ahead10,
            ahead6 + left * 1.75,
            ahead6 - left * 1.75,
            ahead6 + left * 3.5,
            ahead6 - left * 3.5,
        ])
    }

    /// Advances every active vehicle one physics tick under the per-agent
    /// actions, then updates progress, events and termination flags. Returns
    /// events raised this tick.
    fn advance_tick(&mut self, actions: &BTreeMap<AgentId, Action>) -> Vec<Event> {
        let world = self.world.as_mut().expect("caller checked");
        let signal_time = world.signal_time();
        let map = self.map.clone();

        // Snapshot positions for the controllers' world view.
        let actors: Vec<(usize, TrafficActor)> = world
            .vehicles
            .iter()
            .enumerate()
            .filter(|(_, v)| v.active)
            .map(|(i, v)| {
                (
                    i,
                    TrafficActor {
                        position: v.state.position,
                        speed: v.state.speed,
                    },
                )
            })
            .collect();

        // Compute all controls against the pre-tick snapshot.
        let mut controls: Vec<(usize, f64, f64)> = Vec::with_capacity(actors.len());
        for (i, _) in &actors {
            let i = *i;
            let others: Vec<TrafficActor> = actors
                .iter()
                .filter(|(j, _)| *j != i)
                .map(|(_, a)| *a)
                .collect();
            let view = TrafficView {
                map: &map,
                others: &others,
                signal_time,
            };
            let v = &mut world.vehicles[i];
            let (throttle, steer) = match v.state.role {
                VehicleRole::Npc => {
                    let cfg = v.npc_config.unwrap_or_default();
                    npc_control(&mut v.controller, &v.state, &cfg, &view)
                }
                VehicleRole::Controlled(agent) => {
                    let action = actions.get(&agent).expect("validated joint action");
                    match action {
                        Action::Continuous { throttle, steer } => (*throttle, *steer),
                        Action::Waypoint { target } => {
                            let to_target = *target - v.state.position;
                            let dist = to_target.norm();
                            let target = if dist > WAYPOINT_RANGE {
                                v.state.position + to_target * (WAYPOINT_RANGE / dist)
                            } else {
                                *target
                            };
                            v.controller.control(&v.state, target, self.cfg.cruise_speed)
                        }
                        Action::Macro { command } => macro_control(
                            &mut v.controller,
                            &v.state,
                            *command,
                            self.cfg.cruise_speed,
                            &view,
                        ),
                    }
                }
            };
            controls.push((i, throttle, steer));
        }

        // Integrate and update route bookkeeping.
        for (i, throttle, steer) in controls {
            let v = &mut world.vehicles[i];
            v.state = advance_kinematics(&v.state, throttle, steer, TICK_SECONDS);
            let route = map.route(&v.state.route).expect("route exists");
            let (s, lateral) = route.path.project(v.state.position);
            v.lateral = lateral;
            if lateral <= events::OFF_ROUTE_LATERAL {
                v.state.route_progress = v.state.route_progress.max(s);
            }
        }
        world.tick += 1;

        // Deadlock streak counts ticks where every active controlled agent
        // is effectively stopped.
        let controlled_speeds: Vec<f64> = world
            .vehicles
            .iter()
            .filter(|v| v.active && v.agent_id().is_some())
            .map(|v| v.state.speed)
            .collect();
        if !controlled_speeds.is_empty()
            && controlled_speeds.iter().all(|s| *s < events::DEADLOCK_SPEED)
        {
            world.low_speed_streak += 1;
        } else {
            world.low_speed_streak = 0;
        }

        if self.cfg.record_trace {
            for (i, v) in world.vehicles.iter().enumerate() {
                if v.active {
                    self.trace_rows.push(TraceRow {
                        tick: world.tick,
                        vehicle: i,
                        x: v.state.position.x,
                        y: v.state.position.y,
                        heading: v.state.heading,
                        speed: v.state.speed,
                        progress: v.state.route_progress,
                    });
                }
            }
        }

        let tick_events = events::detect_events(world, &map, self.cfg.horizon_ticks);

        // Apply consequences: collisions, completions and off-route end the
        // agent's episode; timeout and deadlock truncate it.
        for event in &tick_events {
            let done = match event.kind {
                EventKind::Collision | EventKind::RouteComplete | EventKind::OffRoute => {
                    DoneKind::Terminated
                }
                EventKind::Timeout | EventKind::Deadlock => DoneKind::Truncated,
            };
            if let Some(v) = world
                .vehicles
                .iter_mut()
                .find(|v| v.agent_id() == Some(event.agent))
            {
                if v.active {
                    v.active = false;
                    v.done = Some(done);
                }
            }
        }

        // Background vehicles leave the world quietly at route end.
        for v in &mut world.vehicles {
            if v.active && v.agent_id().is_none() {
                let route = map.route(&v.state.route).expect("route exists");
                if v.state.route_progress >= route.path.length() - events::ROUTE_COMPLETE_MARGIN {
                    v.active = false;
                }
            }
        }

        self.episode_over = !world
            .vehicles
            .iter()
            .any(|v| v.active && v.agent_id().is_some());
        tick_events
    }

    fn observe(&self, agent: AgentId) -> BirdviewObservation {
        let world = self.world.as_ref().expect("episode in progress");
        let me = world
            .vehicles
            .iter()
            .find(|v| v.agent_id() == Some(agent))
            .expect("agent exists");
        let others: Vec<&VehicleState> = world
            .vehicles
            .iter()
            .filter(|v| v.active && v.agent_id() != Some(agent))
            .map(|v| &v.state)
            .collect();
        rasterize_birdview(&self.map, &me.state, &others, self.cfg.cruise_speed)
    }
}

impl Environment for IntersectionEnv {
    type Obs = BirdviewObservation;
    type Act = Action;

    fn reset(&mut self, params: &ScenarioParams) -> Result<BTreeMap<AgentId, Self::Obs>, EnvError> {
        params
            .validate(&self.spec)
            .map_err(EnvError::BadParams)?;
        if self.spec.map_id != self.map.name {
            return Err(EnvError::UnknownMap(self.spec.map_id.clone()));
        }
        let mut rng = stream(params.seed, 0xD21E);

        let mut vehicles: Vec<SimVehicle> = Vec::new();
        let mut used_slots: Vec<(String, f64)> = Vec::new();
        for agent in 0..self.n_controlled {
            let approach = Approach::ALL[agent];
            let maneuver = self.maneuver_for_agent(params, agent);
            let route = self
                .map
                .route_for(approach, maneuver)
                .expect("four-way map has all routes");
            let slot = *self
                .map
                .approach_slots(approach)
                .first()
                .expect("approach has slots");
            let (position, heading) = self.map.slot_pose(slot);
            used_slots.push((slot.lane.clone(), slot.offset));
            vehicles.push(SimVehicle::new(
                VehicleState {
                    position,
                    heading,
                    speed: 0.0,
                    route: route.name.clone(),
                    route_progress: slot.offset,
                    role: VehicleRole::Controlled(AgentId(agent as u8)),
                },
                None,
            ));
        }

        let npc_count = self
            .knob_value(params, KNOB_NPC_COUNT)
            .and_then(|v| v.as_int())
            .unwrap_or(0)
            .max(0) as usize;
        let npc_cfg = self.npc_config_for(params);
        let mut free_slots: Vec<&map::SpawnSlot> = self
            .map
            .spawn_slots
            .iter()
            .filter(|s| {
                !used_slots
                    .iter()
                    .any(|(lane, off)| *lane == s.lane && (off - s.offset).abs() < 1e-9)
            })
            .collect();
        if npc_count > free_slots.len() {
            return Err(EnvError::BadParams(format!(
                "npc_count {npc_count} exceeds {} free spawn slots",
                free_slots.len()
            )));
        }
        free_slots.shuffle(&mut rng);
        for slot in free_slots.into_iter().take(npc_count) {
            let lane = self.map.lane(&slot.lane).expect("slot lane exists");
            let approach = Approach::from_str(
                lane.id.strip_suffix("_in").expect("spawn slots sit on approach lanes"),
            )
            .expect("approach lane name");
            let maneuver = *Maneuver::ALL
                .get(rng.gen_range(0..Maneuver::ALL.len()))
                .unwrap();
            let route = self
                .map
                .route_for(approach, maneuver)
                .expect("route exists");
            let (position, heading) = self.map.slot_pose(slot);
            vehicles.push(SimVehicle::new(
                VehicleState {
                    position,
                    heading,
                    speed: npc_cfg.target_speed,
                    route: route.name.clone(),
                    route_progress: slot.offset,
                    role: VehicleRole::Npc,
                },
                Some(npc_cfg),
            ));
        }

        let signal_offset = rng.gen::<f64>() * self.map.signal.cycle();
        self.world = Some(WorldState {
            vehicles,
            tick: 0,
            signal_offset,
            low_speed_streak: 0,
            action_space: self.cfg.action_space,
        });
        self.episode_over = false;
        self.trace_rows.clear();

        let mut obs = BTreeMap::new();
        for agent in 0..self.n_controlled {
            let id = AgentId(agent as u8);
            obs.insert(id, self.observe(id));
        }
        Ok(obs)
    }

    fn step(&mut self, joint: &JointAction<Action>) -> Result<StepResult<BirdviewObservation>, EnvError> {
        if self.world.is_none() {
            return Err(EnvError::ResetRequired);
        }
        if self.episode_over {
            return Err(EnvError::EpisodeOver);
        }
        let active = self.active_agents();
        for agent in &active {
            match joint.get(agent) {
                None => return Err(EnvError::MissingAction(*agent)),
                Some(a) if a.kind() != self.cfg.action_space => {
                    return Err(EnvError::ActionKindMismatch)
                }
                _ => {}
            }
        }
        for agent in joint.keys() {
            if !active.contains(agent) {
                return Err(EnvError::ActionForInactiveAgent(*agent));
            }
        }

        let mut accumulators: BTreeMap<AgentId, reward::DecisionReward> = active
            .iter()
            .map(|a| (*a, reward::DecisionReward::new()))
            .collect();
        let mut all_events: Vec<Event> = Vec::new();

        for _ in 0..self.cfg.action_space.persistence() {
            if self.episode_over {
                break;
            }
            let prev: BTreeMap<AgentId, VehicleState> = {
                let world = self.world.as_ref().unwrap();
                world
                    .vehicles
                    .iter()
                    .filter(|v| v.active)
                    .filter_map(|v| v.agent_id().map(|id| (id, v.state.clone())))
                    .collect()
            };
            let tick_events = self.advance_tick(joint);
            let world = self.world.as_ref().unwrap();
            for (agent, prev_state) in &prev {
                let cur = world
                    .vehicles
                    .iter()
                    .find(|v| v.agent_id() == Some(*agent))
                    .expect("vehicle persists");
                accumulators
                    .get_mut(agent)
                    .expect("accumulator per acting agent")
                    .add_tick(prev_state, &cur.state, self.cfg.cruise_speed);
            }
            all_events.extend(tick_events);
        }

        let world = self.world.as_ref().unwrap();
        let mut observations = BTreeMap::new();
        let mut rewards = BTreeMap::new();
        let mut terminated = BTreeMap::new();
        let mut truncated = BTreeMap::new();
        for agent in &active {
            observations.insert(*agent, self.observe(*agent));
            rewards.insert(*agent, accumulators[agent].total());
            let done = world
                .vehicles
                .iter()
                .find(|v| v.agent_id() == Some(*agent))
                .and_then(|v| v.done);
            terminated.insert(*agent, done == Some(DoneKind::Terminated));
            truncated.insert(*agent, done == Some(DoneKind::Truncated));
        }

        Ok(StepResult {
            observations,
            rewards,
            terminated,
            truncated,
            events: all_events,
        })
    }

    fn active_agents(&self) -> Vec<AgentId> {
        self.world
            .as_ref()
            .map(|w| {
                w.vehicles
                    .iter()
                    .filter(|v| v.active)
                    .filter_map(|v| v.agent_id())
                    .collect()
            })
            .unwrap_or_default()
    }

    fn episode_over(&self) -> bool {
        self.episode_over
    }
}

#[cfg(test)]
mod tests;
