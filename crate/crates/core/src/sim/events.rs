//! Traffic event detection over a world snapshot.

use super::geometry::obbs_overlap;
use super::world::{SimVehicle, WorldState};
use super::ActionSpaceKind;
use crate::posg::{Event, EventKind};
use crate::sim::map::RoadMap;

/// Route completion margin, meters.
pub const ROUTE_COMPLETE_MARGIN: f64 = 0.5;
/// Lateral deviation beyond which a vehicle counts as off-route, meters.
pub const OFF_ROUTE_LATERAL: f64 = 3.0;
/// Consecutive all-stopped ticks before a deadlock is declared.
pub const DEADLOCK_TICKS: u32 = 100;
/// Speed below which an agent counts as stopped, m/s.
pub const DEADLOCK_SPEED: f64 = 0.1;

/// Scans the world for events attributable to controlled agents: pairwise
/// separating-axis collisions, route completion, off-route departure (not
/// for the macro action space, whose controller cannot leave lanes), horizon
/// timeout and all-stopped deadlock.
pub fn detect_events(world: &WorldState, map: &RoadMap, horizon_ticks: u32) -> Vec<Event> {
    let mut events = Vec::new();
    let t = world.sim_time();
    let active: Vec<(usize, &SimVehicle)> = world
        .vehicles
        .iter()
        .enumerate()
        .filter(|(_, v)| v.active)
        .collect();

    for (pos, (i, a)) in active.iter().enumerate() {
        let fa = a.state.footprint();
        for (j, b) in active.iter().skip(pos + 1).map(|(j, b)| (*j, *b)) {
            let _ = j;
            if obbs_overlap(&fa, &b.state.footprint()) {
                for v in [a, &b] {
                    if let Some(agent) = v.agent_id() {
                        events.push(Event {
                            kind: EventKind::Collision,
                            agent,
                            sim_time: t,
                        });
                    }
                }
            }
        }
        let _ = i;
    }

    for (_, v) in &active {
        let Some(agent) = v.agent_id() else { continue };
        let route = map.route(&v.state.route).expect("vehicle route exists");
        if v.state.route_progress >= route.path.length() - ROUTE_COMPLETE_MARGIN {
            events.push(Event {
                kind: EventKind::RouteComplete,
                agent,
                sim_time: t,
            });
        }
        if world.action_space != ActionSpaceKind::Macro && v.lateral > OFF_ROUTE_LATERAL {
            events.push(Event {
                kind: EventKind::OffRoute,
                agent,
                sim_time: t,
            });
        }
    }

    let active_agents: Vec<_> = active.iter().filter_map(|(_, v)| v.agent_id()).collect();
    if world.tick >= horizon_ticks {
        for agent in &active_agents {
            events.push(Event {
                kind: EventKind::Timeout,
                agent: *agent,
                sim_time: t,
            });
        }
    } else if world.low_speed_streak >= DEADLOCK_TICKS && !active_agents.is_empty() {
        for agent in &active_agents {
            events.push(Event {
                kind: EventKind::Deadlock,
                agent: *agent,
                sim_time: t,
            });
        }
    }

    events
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::posg::AgentId;
    use crate::sim::geometry::Vec2;
    use crate::sim::vehicle::{VehicleRole, VehicleState};
    use crate::sim::world::SimVehicle;

    fn controlled(idx: u8, pos: Vec2, heading: f64, route: &str, progress: f64) -> SimVehicle {
        SimVehicle::new(
            VehicleState {
                position: pos,
                heading,
                speed: 0.0,
                route: route.to_string(),
                route_progress: progress,
                role: VehicleRole::Controlled(AgentId(idx)),
            },
            None,
        )
    }

    fn world_with(vehicles: Vec<SimVehicle>) -> WorldState {
        WorldState {
            vehicles,
            tick: 0,
            signal_offset: 0.0,
            low_speed_streak: 0,
            action_space: ActionSpaceKind::Continuous,
        }
    }

    #[test]
    fn identical_pose_is_a_collision_for_both() {
        let map = RoadMap::four_way();
        let a = controlled(0, Vec2::new(2.0, -20.0), 1.57, "south_straight", 30.0);
        let b = controlled(1, Vec2::new(2.0, -20.0), 1.57, "south_straight", 30.0);
        let world = world_with(vec![a, b]);
        let events = detect_events(&world, &map, 400);
        let collisions: Vec<_> = events
            .iter()
            .filter(|e| e.kind == EventKind::Collision)
            .collect();
        assert_eq!(collisions.len(), 2);
    }

    #[test]
    fn distant_rectangles_do_not_collide() {
        let map = RoadMap::four_way();
        let a = controlled(0, Vec2::new(2.0, -20.0), 1.57, "south_straight", 30.0);
        let b = controlled(1, Vec2::new(2.0, -40.0), 1.57, "south_straight", 10.0);
        let world = world_with(vec![a, b]);
        assert!(detect_events(&world, &map, 400)
            .iter()
            .all(|e| e.kind != EventKind::Collision));
    }

    #[test]
    fn route_complete_fires_at_margin() {
        let map = RoadMap::four_way();
        let route = map.route("south_straight").unwrap();
        let len = route.path.length();
        let (pos, heading) = route.path.point_at(len - 0.3);
        let v = controlled(0, pos, heading, "south_straight", len - 0.3);
        let world = world_with(vec![v]);
        let events = detect_events(&world, &map, 400);
        assert!(events.iter().any(|e| e.kind == EventKind::RouteComplete));
    }

    #[test]
    fn timeout_beats_deadlock_reporting() {
        let map = RoadMap::four_way();
        let v = controlled(0, Vec2::new(2.0, -20.0), 1.57, "south_straight", 30.0);
        let mut world = world_with(vec![v]);
        world.tick = 400;
        world.low_speed_streak = 500;
        let events = detect_events(&world, &map, 400);
        assert!(events.iter().any(|e| e.kind == EventKind::Timeout));
        assert!(events.iter().all(|e| e.kind != EventKind::Deadlock));
    }

    #[test]
    fn off_route_skipped_for_macro_agents() {
        let map = RoadMap::four_way();
        let mut v = controlled(0, Vec2::new(30.0, -30.0), 0.0, "south_straight", 30.0);
        v.lateral = 25.0;
        let mut world = world_with(vec![v]);
        assert!(detect_events(&world, &map, 400)
            .iter()
            .any(|e| e.kind == EventKind::OffRoute));
        world.action_space = ActionSpaceKind::Macro;
        assert!(detect_events(&world, &map, 400)
            .iter()
            .all(|e| e.kind != EventKind::OffRoute));
    }
}
