//! Steering and speed controllers: waypoint tracking (PD heading + P speed),
//! route following with curvature-aware speed, IDM gap control, the macro
//! command controller and the scripted NPC policy.

use super::geometry::{wrap_angle, Vec2};
use super::map::{Approach, LightState, Maneuver, RoadMap, Route};
use super::vehicle::{VehicleState, MAX_ACCEL, MAX_BRAKE, TICK_SECONDS, VEHICLE_LENGTH};

pub const HEADING_KP: f64 = 1.5;
pub const HEADING_KD: f64 = 0.3;
pub const SPEED_KP: f64 = 0.5;
/// Lateral acceleration budget used to slow down through curves.
const LAT_ACCEL_MAX: f64 = 3.0;
/// Lane-keeping lookahead on the followed route, meters.
pub const LOOKAHEAD: f64 = 5.0;
/// Leaders further ahead than this are ignored.
const LEADER_RANGE: f64 = 30.0;
/// Half-width of the corridor in which a vehicle counts as a leader.
const LEADER_LATERAL: f64 = 2.0;

/// Intelligent-driver-model gap parameters.
#[derive(Debug, Clone, Copy)]
pub struct IdmParams {
    pub min_gap: f64,
    pub time_headway: f64,
    pub comfort_brake: f64,
}

impl Default for IdmParams {
    fn default() -> Self {
        IdmParams {
            min_gap: 2.0,
            time_headway: 1.5,
            comfort_brake: 2.0,
        }
    }
}

/// IDM acceleration mapped to a throttle command.
pub fn idm_throttle(speed: f64, target_speed: f64, gap: f64, approach_rate: f64, p: &IdmParams) -> f64 {
    let v0 = target_speed.max(0.1);
    let s = gap.max(0.1);
    let s_star = p.min_gap
        + speed * p.time_headway
        + speed * approach_rate / (2.0 * (MAX_ACCEL * p.comfort_brake).sqrt());
    let accel = MAX_ACCEL * (1.0 - (speed / v0).powi(4) - (s_star.max(0.0) / s).powi(2));
    accel_to_throttle(accel)
}

fn accel_to_throttle(accel: f64) -> f64 {
    if accel >= 0.0 {
        (accel / MAX_ACCEL).clamp(0.0, 1.0)
    } else {
        (accel / MAX_BRAKE).clamp(-1.0, 0.0)
    }
}

/// PD heading / P speed waypoint tracker. Holds the previous heading error
/// for the derivative term.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct WaypointController {
    prev_heading_err: Option<f64>,
}

impl WaypointController {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn reset(&mut self) {
        self.prev_heading_err = None;
    }

    /// Throttle/steer toward a fixed world-frame target at `speed_target`.
    /// Left-positive steering: a target 90 degrees to the left yields
    /// steer > 0.
    pub fn control(&mut self, v: &VehicleState, target: Vec2, speed_target: f64) -> (f64, f64) {
        let to_target = target - v.position;
        let heading_err = if to_target.norm() < 1e-9 {
            0.0
        } else {
            wrap_angle(to_target.angle() - v.heading)
        };
        let derivative = match self.prev_heading_err {
            Some(prev) => (heading_err - prev) / TICK_SECONDS,
            None => 0.0,
        };
        self.prev_heading_err = Some(heading_err);
        let steer = (HEADING_KP * heading_err + HEADING_KD * derivative).clamp(-1.0, 1.0);
        let throttle = (SPEED_KP * (speed_target - v.speed)).clamp(-1.0, 1.0);
        (throttle, steer)
    }
}

/// What a controller can see of the rest of the world.
#[derive(Debug, Clone, Copy)]
pub struct TrafficActor {
    pub position: Vec2,
    pub speed: f64,
}

/// Read-only context handed to route-following controllers each tick.
pub struct TrafficView<'a> {
    pub map: &'a RoadMap,
    /// Every other active vehicle.
    pub others: &'a [TrafficActor],
    /// Signal time (seconds, includes the scenario phase offset).
    pub signal_time: f64,
}

/// Nearest leader ahead on `route` within range: returns (gap, leader speed).
/// The gap is bumper-to-bumper along the route.
pub fn leader_gap(view: &TrafficView, route: &Route, my_s: f64) -> Option<(f64, f64)> {
    let mut best: Option<(f64, f64)> = None;
    for actor in view.others {
        let (s, lateral) = route.path.project(actor.position);
        if lateral > LEADER_LATERAL {
            continue;
        }
        let gap = s - my_s - VEHICLE_LENGTH;
        if gap <= 0.0 || gap > LEADER_RANGE {
            continue;
        }
        if best.map(|(g, _)| gap < g).unwrap_or(true) {
            best = Some((gap, actor.speed));
        }
    }
    best
}

/// Follows `route` at `speed_target`: waypoint control toward a point
/// [`LOOKAHEAD`] ahead of the vehicle's projection, with speed capped by the
/// curvature ahead.
pub fn follow_route(
    ctl: &mut WaypointController,
    v: &VehicleState,
    route: &Route,
    speed_target: f64,
) -> (f64, f64) {
    let (s, _) = route.path.project(v.position);
    let (target, _) = route.path.point_at(s + LOOKAHEAD);
    let kappa = route.path.curvature_ahead(s, LOOKAHEAD + 3.0);
    let capped = if kappa > 1e-6 {
        speed_target.min((LAT_ACCEL_MAX / kappa).sqrt())
    } else {
        speed_target
    };
    ctl.control(v, target, capped)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MacroCommand {
    FollowLane,
    Stop,
    TurnLeft,
    TurnRight,
    GoStraight,
}

impl MacroCommand {
    pub const ALL: [MacroCommand; 5] = [
        MacroCommand::FollowLane,
        MacroCommand::Stop,
        MacroCommand::TurnLeft,
        MacroCommand::TurnRight,
        MacroCommand::GoStraight,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            MacroCommand::FollowLane => "FOLLOW_LANE",
            MacroCommand::Stop => "STOP",
            MacroCommand::TurnLeft => "TURN_LEFT",
            MacroCommand::TurnRight => "TURN_RIGHT",
            MacroCommand::GoStraight => "GO_STRAIGHT",
        }
    }
}

/// The route branch a macro command selects, given the assigned route.
pub fn commanded_route<'a>(
    map: &'a RoadMap,
    assigned: &'a Route,
    command: MacroCommand,
) -> &'a Route {
    let maneuver = match command {
        MacroCommand::FollowLane | MacroCommand::Stop => assigned.maneuver,
        MacroCommand::TurnLeft => Maneuver::Left,
        MacroCommand::TurnRight => Maneuver::Right,
        MacroCommand::GoStraight => Maneuver::Straight,
    };
    map.route_for(assigned.approach, maneuver).unwrap_or(assigned)
}

/// Macro-command controller: lane keeping on the commanded branch plus IDM
/// braking behind leaders; STOP brakes fully.
pub fn macro_control(
    ctl: &mut WaypointController,
    v: &VehicleState,
    command: MacroCommand,
    cruise_speed: f64,
    view: &TrafficView,
) -> (f64, f64) {
    if command == MacroCommand::Stop {
        return (-1.0, 0.0);
    }
    let assigned = view
        .map
        .route(&v.route)
        .expect("vehicle route exists on map");
    let followed = commanded_route(view.map, assigned, command);
    let (throttle, steer) = follow_route(ctl, v, followed, cruise_speed);
    let (my_s, _) = followed.path.project(v.position);
    let throttle = match leader_gap(view, followed, my_s) {
        Some((gap, leader_speed)) => {
            let idm = idm_throttle(
                v.speed,
                cruise_speed,
                gap,
                v.speed - leader_speed,
                &IdmParams::default(),
            );
            throttle.min(idm)
        }
        None => throttle,
    };
    (throttle, steer)
}

/// Scripted background-vehicle behavior bound to scenario knobs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NpcBehaviorConfig {
    pub target_speed: f64,
    pub keeps_safety_distance: bool,
    pub respects_traffic_lights: bool,
}

impl Default for NpcBehaviorConfig {
    fn default() -> Self {
        NpcBehaviorConfig {
            target_speed: 6.0,
            keeps_safety_distance: true,
            respects_traffic_lights: true,
        }
    }
}

/// NPC policy: follow the assigned route at the configured target speed,
/// with optional IDM gap keeping and optional stopping at red lights.
pub fn npc_control(
    ctl: &mut WaypointController,
    v: &VehicleState,
    cfg: &NpcBehaviorConfig,
    view: &TrafficView,
) -> (f64, f64) {
    let route = view
        .map
        .route(&v.route)
        .expect("npc route exists on map");
    let (throttle, steer) = follow_route(ctl, v, route, cfg.target_speed);
    let (my_s, _) = route.path.project(v.position);
    let mut throttle = throttle;

    if cfg.keeps_safety_distance {
        if let Some((gap, leader_speed)) = leader_gap(view, route, my_s) {
            let idm = idm_throttle(
                v.speed,
                cfg.target_speed,
                gap,
                v.speed - leader_speed,
                &IdmParams::default(),
            );
            throttle = throttle.min(idm);
        }
    }

    if cfg.respects_traffic_lights {
        let light = view.map.signal.state(route.approach.axis(), view.signal_time);
        if light != LightState::Green {
            // Treat the stop line as a stationary leader; IDM's minimum gap
            // brings the vehicle to rest short of the line.
            let gap_to_line = route.entry_s - my_s - VEHICLE_LENGTH / 2.0;
            if gap_to_line > 0.0 {
                let idm = idm_throttle(v.speed, cfg.target_speed, gap_to_line, v.speed, &IdmParams::default());
                throttle = throttle.min(idm);
            }
        }
    }

    (throttle, steer)
}

/// Kept so the approach enum is reachable from controller call sites.
pub fn approach_of_route(route: &Route) -> Approach {
    route.approach
}
