//! Vehicle state and the kinematic bicycle model.

use super::geometry::{wrap_angle, Obb, Vec2};
use crate::posg::AgentId;

pub const V_MAX: f64 = 15.0;
pub const VEHICLE_LENGTH: f64 = 4.5;
pub const VEHICLE_WIDTH: f64 = 2.0;
pub const WHEELBASE: f64 = 2.7;
pub const MAX_ACCEL: f64 = 3.0;
pub const MAX_BRAKE: f64 = 6.0;
pub const MAX_STEER_ANGLE: f64 = 0.5;
/// Fixed physics tick, seconds.
pub const TICK_SECONDS: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VehicleRole {
    Controlled(AgentId),
    Npc,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VehicleState {
    pub position: Vec2,
    /// Radians, world frame, wrapped to (-pi, pi].
    pub heading: f64,
    /// m/s, clamped to [0, V_MAX].
    pub speed: f64,
    /// Assigned route name.
    pub route: String,
    /// Meters along the assigned route; non-decreasing while on-route,
    /// frozen while off-route.
    pub route_progress: f64,
    pub role: VehicleRole,
}

impl VehicleState {
    pub fn footprint(&self) -> Obb {
        Obb {
            center: self.position,
            half_length: VEHICLE_LENGTH / 2.0,
            half_width: VEHICLE_WIDTH / 2.0,
            heading: self.heading,
        }
    }
}

/// One tick of the kinematic bicycle model with semi-implicit Euler
/// integration: speed first, then heading, then displacement along the new
/// heading. Inputs outside [-1, 1] are clamped; negative throttle brakes.
pub fn advance_kinematics(v: &VehicleState, throttle: f64, steer: f64, dt: f64) -> VehicleState {
    let throttle = throttle.clamp(-1.0, 1.0);
    let steer = steer.clamp(-1.0, 1.0);
    let accel = if throttle >= 0.0 {
        throttle * MAX_ACCEL
    } else {
        throttle * MAX_BRAKE
    };
    let speed = (v.speed + accel * dt).clamp(0.0, V_MAX);
    let steer_angle = steer * MAX_STEER_ANGLE;
    let heading = wrap_angle(v.heading + speed / WHEELBASE * steer_angle.tan() * dt);
    let position = v.position + Vec2::unit_from_angle(heading) * (speed * dt);
    VehicleState {
        position,
        heading,
        speed,
        ..v.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn at_rest() -> VehicleState {
        VehicleState {
            position: Vec2::new(0.0, 0.0),
            heading: 0.0,
            speed: 0.0,
            route: "r".to_string(),
            route_progress: 0.0,
            role: VehicleRole::Npc,
        }
    }

    #[test]
    fn zero_input_at_rest_is_a_fixed_point() {
        let v = at_rest();
        let next = advance_kinematics(&v, 0.0, 0.0, TICK_SECONDS);
        assert_eq!(v, next);
    }

    #[test]
    fn full_throttle_one_tick_from_rest() {
        // v <- 3 * 0.05 = 0.15 m/s; x <- 0.15 * 0.05 = 0.0075 m.
        let v = at_rest();
        let next = advance_kinematics(&v, 1.0, 0.0, TICK_SECONDS);
        assert!((next.speed - 0.15).abs() < 1e-12);
        assert!((next.position.x - 0.0075).abs() < 1e-12);
        assert!(next.position.y.abs() < 1e-12);
    }

    #[test]
    fn steer_mirror_symmetry() {
        let mut left = at_rest();
        let mut right = at_rest();
        for _ in 0..100 {
            left = advance_kinematics(&left, 0.8, 0.4, TICK_SECONDS);
            right = advance_kinematics(&right, 0.8, -0.4, TICK_SECONDS);
        }
        // Trajectories reflect across the initial heading axis (x-axis).
        assert!((left.position.x - right.position.x).abs() < 1e-9);
        assert!((left.position.y + right.position.y).abs() < 1e-9);
        assert!((left.heading + right.heading).abs() < 1e-9);
    }

    #[test]
    fn speed_clamps_to_bounds() {
        let mut v = at_rest();
        for _ in 0..1000 {
            v = advance_kinematics(&v, 1.0, 0.0, TICK_SECONDS);
        }
        assert!((v.speed - V_MAX).abs() < 1e-12);
        for _ in 0..100 {
            v = advance_kinematics(&v, -1.0, 0.0, TICK_SECONDS);
        }
        assert_eq!(v.speed, 0.0);
    }

    #[test]
    fn braking_is_stronger_than_accelerating() {
        let mut v = at_rest();
        v.speed = 6.0;
        let slower = advance_kinematics(&v, -1.0, 0.0, TICK_SECONDS);
        assert!((slower.speed - (6.0 - MAX_BRAKE * TICK_SECONDS)).abs() < 1e-12);
    }
}
