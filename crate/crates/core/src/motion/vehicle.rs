//! Kinematic bicycle model about the rear axle.

use serde::{Deserialize, Serialize};

use super::MotionError;
use crate::config::VehicleParams;
use crate::geometry::{Footprint, Vec2};
use crate::world::VehicleState;

/// Normalized actuator command.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ControlCommand {
    /// [-1, 1]; negative brakes.
    pub throttle: f64,
    /// [-1, 1]; positive steers left (counter-clockwise).
    pub steer: f64,
}

impl ControlCommand {
    pub fn new(throttle: f64, steer: f64) -> Self {
        Self { throttle: clamp_unit(throttle), steer: clamp_unit(steer) }
    }
}

fn clamp_unit(v: f64) -> f64 {
    if v.is_nan() {
        0.0
    } else {
        v.clamp(-1.0, 1.0)
    }
}

/// One explicit step. Position advances along the mean of the old and new
/// headings; speed integrates after the position update.
pub fn step_vehicle(
    v: &VehicleState,
    cmd: ControlCommand,
    dt: f64,
    params: &VehicleParams,
) -> Result<VehicleState, MotionError> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(MotionError::InvalidStep(dt));
    }
    let cmd = ControlCommand::new(cmd.throttle, cmd.steer);
    let yaw_rate = v.speed / params.wheelbase * (params.max_steer() * cmd.steer).tan();
    let heading = v.heading + yaw_rate * dt;
    let mean = 0.5 * (v.heading + heading);
    let mut next = v.clone();
    next.position = v.position + Vec2::from_heading(mean).scale(v.speed * dt);
    next.heading = heading;
    next.speed = (v.speed + params.a_max * cmd.throttle * dt).clamp(0.0, params.v_cap);
    if cmd.throttle <= 0.0 && next.speed < STANDSTILL_SPEED {
        next.speed = 0.0;
    }
    Ok(next)
}

/// Below this speed an unpowered vehicle is held at rest by static friction.
pub const STANDSTILL_SPEED: f64 = 0.1;

/// Body rectangle; the rear axle sits half a wheelbase behind the center.
pub fn vehicle_footprint(v: &VehicleState, params: &VehicleParams) -> Footprint {
    Footprint {
        center: v.position + Vec2::from_heading(v.heading).scale(params.wheelbase / 2.0),
        heading: v.heading,
        length: params.length,
        width: params.width,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::LaneLocation;

    fn vehicle(speed: f64) -> VehicleState {
        VehicleState {
            position: Vec2::new(0.0, 0.0),
            heading: 0.0,
            speed,
            cruise_kmh: 30.0,
            lights_on: false,
            lane: LaneLocation { road: "r".into(), lane: 1, s: 0.0, offset: 0.0 },
            in_junction: false,
        }
    }

    #[test]
    fn straight_line_motion() {
        let p = VehicleParams::default();
        let v = vehicle(7.0);
        let n = step_vehicle(&v, ControlCommand::new(0.0, 0.0), 0.05, &p).unwrap();
        assert!((n.position.dist(v.position) - 7.0 * 0.05).abs() < 1e-12);
        assert_eq!(n.heading, 0.0);
        assert_eq!(n.speed, 7.0);
    }

    #[test]
    fn rejects_non_positive_dt() {
        let p = VehicleParams::default();
        assert!(step_vehicle(&vehicle(1.0), ControlCommand::default(), 0.0, &p).is_err());
        assert!(step_vehicle(&vehicle(1.0), ControlCommand::default(), -0.1, &p).is_err());
    }

    #[test]
    fn command_is_clamped_and_speed_bounded() {
        let p = VehicleParams::default();
        let c = ControlCommand::new(5.0, -3.0);
        assert_eq!((c.throttle, c.steer), (1.0, -1.0));
        let n = step_vehicle(&vehicle(19.99), c, 1.0, &p).unwrap();
        assert_eq!(n.speed, p.v_cap);
        let n = step_vehicle(&vehicle(0.5), ControlCommand::new(-1.0, 0.0), 1.0, &p).unwrap();
        assert_eq!(n.speed, 0.0);
    }

    #[test]
    fn positive_steer_turns_counter_clockwise() {
        let p = VehicleParams::default();
        let n = step_vehicle(&vehicle(5.0), ControlCommand::new(0.0, 0.5), 0.1, &p).unwrap();
        assert!(n.heading > 0.0);
    }
}
