//! Action executor: maneuver state, reference-path tracking and the
//! pure-pursuit / proportional-speed controller.

use std::f64::consts::PI;

use super::action::{Direction, PhysicalAction};
use super::vehicle::ControlCommand;
use super::MotionError;
use crate::config::{ControlParams, VehicleParams};
use crate::geometry::{hermite, wrap_angle, Polyline, Vec2};
use crate::planner::{classify_turn, TurnDirection};
use crate::world::{
    front_object, locate, locate_on_road, visible_signs, LaneLocation, MapGraph, RoadIdx, VehicleState, WorldState,
    ON_ROAD_TOLERANCE,
};

#[derive(Debug, Clone, PartialEq)]
pub enum Maneuver {
    Following,
    Switching { direction: Direction, from_lane: u32, to_lane: u32, progress: f64 },
    UTurning { target_road: String, progress: f64 },
    Stopped,
}

/// Committed path through a junction.
#[derive(Debug, Clone, PartialEq)]
pub struct JunctionTraversal {
    pub junction: String,
    pub exit_road: String,
    pub exit_lane: u32,
    pub turn: TurnDirection,
    /// From the entry pose to the start of the exit lane.
    pub connector: Polyline,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExecutorState {
    pub maneuver: Maneuver,
    /// Latched JTurn direction, consumed at the next junction entry.
    pub pending_turn: Option<Direction>,
    pub target_cruise_kmh: f64,
    pub lights_on: bool,
    /// Lane being tracked on the current road.
    pub lane: u32,
    pub traversal: Option<JunctionTraversal>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TrackingEvent {
    EnteredJunction { junction: String, exit_road: String, turn: TurnDirection },
    ExitedJunction { road: String },
    SwitchCompleted { lane: u32 },
    UTurnCompleted { road: String },
}

impl ExecutorState {
    pub fn new(vehicle: &VehicleState) -> Self {
        Self {
            maneuver: Maneuver::Following,
            pending_turn: None,
            target_cruise_kmh: vehicle.cruise_kmh,
            lights_on: vehicle.lights_on,
            lane: vehicle.lane.lane,
            traversal: None,
        }
    }

    pub fn label(&self) -> &'static str {
        match self.maneuver {
            Maneuver::Stopped => "stopped",
            Maneuver::Switching { .. } => "switching",
            Maneuver::UTurning { .. } => "uturning",
            Maneuver::Following if self.traversal.is_some() => "turning",
            Maneuver::Following => "following",
        }
    }

    /// Commanded speed before safety caps, m/s.
    pub fn commanded_speed(&self, vehicle: &VehicleParams, control: &ControlParams) -> f64 {
        let cruise = (self.target_cruise_kmh / 3.6).clamp(0.0, vehicle.v_cap);
        match self.maneuver {
            Maneuver::Stopped => 0.0,
            Maneuver::UTurning { .. } => cruise.min(control.uturn_speed),
            _ => cruise,
        }
    }
}

fn busy(exec: &ExecutorState, action: &'static str) -> Result<(), MotionError> {
    if exec.traversal.is_some() {
        return Err(MotionError::InJunction(action));
    }
    match exec.maneuver {
        Maneuver::Switching { .. } => Err(MotionError::Busy { action, maneuver: "switching" }),
        Maneuver::UTurning { .. } => Err(MotionError::Busy { action, maneuver: "uturning" }),
        Maneuver::Stopped => Err(MotionError::Busy { action, maneuver: "stopped" }),
        Maneuver::Following => Ok(()),
    }
}

/// Applies one action. On error the caller keeps the previous state.
pub fn apply_action(
    exec: &ExecutorState,
    action: PhysicalAction,
    map: &MapGraph,
    vehicle: &VehicleState,
    params: &VehicleParams,
) -> Result<ExecutorState, MotionError> {
    let mut next = exec.clone();
    match action {
        PhysicalAction::LaneFollow => {
            if next.maneuver == Maneuver::Stopped {
                next.maneuver = Maneuver::Following;
            }
        }
        PhysicalAction::Start => {
            if next.maneuver == Maneuver::Stopped {
                next.maneuver = Maneuver::Following;
            }
        }
        PhysicalAction::Stop => {
            if let Maneuver::Switching { from_lane, to_lane, progress, .. } = next.maneuver {
                next.lane = if progress >= 0.5 { to_lane } else { from_lane };
            }
            next.maneuver = Maneuver::Stopped;
        }
        PhysicalAction::LaneSwitch(direction) => {
            busy(exec, "switch lanes")?;
            let road = map
                .road_by_id(&vehicle.lane.road)
                .ok_or_else(|| MotionError::World(crate::world::WorldError::UnknownRoad(vehicle.lane.road.clone())))?;
            let to_lane = match direction {
                Direction::Left if exec.lane > 1 => exec.lane - 1,
                Direction::Right if exec.lane < road.lane_count() => exec.lane + 1,
                _ => return Err(MotionError::NoLaneAvailable(direction.label())),
            };
            next.maneuver = Maneuver::Switching { direction, from_lane: exec.lane, to_lane, progress: 0.0 };
        }
        PhysicalAction::JTurn(direction) => {
            next.pending_turn = Some(direction);
        }
        PhysicalAction::UTurn => {
            busy(exec, "make a U-turn")?;
            let radius = params.wheelbase / params.max_steer().tan();
            let left = Vec2::from_heading(vehicle.heading + PI / 2.0);
            let landing = vehicle.position + left.scale(2.0 * radius);
            let loc = locate(map, landing, vehicle.heading + PI).map_err(|_| MotionError::NoOpposingRoad)?;
            if loc.road == vehicle.lane.road {
                return Err(MotionError::NoOpposingRoad);
            }
            next.maneuver = Maneuver::UTurning { target_road: loc.road, progress: 0.0 };
        }
        PhysicalAction::SpeedChange(delta) => {
            next.target_cruise_kmh = (exec.target_cruise_kmh + delta.kmh()).max(0.0);
        }
        PhysicalAction::LightChange(state) => {
            next.lights_on = state == super::action::LightState::On;
        }
    }
    Ok(next)
}

/// Exit taken at the end of `road`: the pending direction if such an exit
/// exists, otherwise straight, otherwise none (the vehicle stalls).
pub fn available_exit(map: &MapGraph, road: RoadIdx, pending: Option<Direction>) -> Option<(RoadIdx, TurnDirection)> {
    let inbound = map.road(road).end_heading();
    let classified: Vec<(RoadIdx, TurnDirection)> =
        map.exits(road).iter().map(|&e| (e, classify_turn(inbound, map.road(e).start_heading()))).collect();
    let wanted = pending.map(|d| match d {
        Direction::Left => TurnDirection::Left,
        Direction::Right => TurnDirection::Right,
    });
    wanted
        .and_then(|w| classified.iter().find(|(_, t)| *t == w))
        .or_else(|| classified.iter().find(|(_, t)| *t == TurnDirection::Straight))
        .copied()
}

fn exit_lane(map: &MapGraph, exit: RoadIdx, turn: TurnDirection, current_lane: u32) -> u32 {
    let n = map.road(exit).lane_count();
    match turn {
        TurnDirection::Left | TurnDirection::Uturn => 1,
        TurnDirection::Right => n,
        TurnDirection::Straight => current_lane.clamp(1, n),
    }
}

fn lane_center(map: &MapGraph, road: RoadIdx, lane: u32) -> f64 {
    map.road(road).lane(lane).map(|l| l.center_offset).unwrap_or(0.0)
}

fn cosine_blend(p: f64) -> f64 {
    (1.0 - (PI * p.clamp(0.0, 1.0)).cos()) / 2.0
}

/// Effective peak acceleration under the current weather.
pub fn effective_accel(world: &WorldState, vehicle: &VehicleParams, control: &ControlParams) -> f64 {
    if world.weather.is_slippery() {
        vehicle.a_max * control.weather_accel_factor
    } else {
        vehicle.a_max
    }
}

fn braking_cap(a: f64, distance: f64) -> f64 {
    (2.0 * a * distance.max(0.0)).sqrt()
}

/// Throttle and steering for the current tick.
pub fn plan_controls(
    exec: &ExecutorState,
    world: &WorldState,
    map: &MapGraph,
    vehicle: &VehicleParams,
    control: &ControlParams,
) -> Result<ControlCommand, MotionError> {
    let v = &world.vehicle;
    let road_idx = map
        .road_idx(&v.lane.road)
        .ok_or_else(|| MotionError::World(crate::world::WorldError::UnknownRoad(v.lane.road.clone())))?;
    let uturning = matches!(exec.maneuver, Maneuver::UTurning { .. });
    if !uturning && exec.traversal.is_none() && v.lane.offset.abs() > ON_ROAD_TOLERANCE {
        return Err(MotionError::OffRoad { x: v.position.x, y: v.position.y });
    }

    let lookahead = control.lookahead_min.max(control.lookahead_time * v.speed);
    let steer = if uturning {
        1.0
    } else {
        let target = lookahead_point(exec, v, map, road_idx, lookahead, control);
        pure_pursuit(v, target, vehicle)
    };

    let a_eff = effective_accel(world, vehicle, control);
    let a_comf = control.comfort_decel_fraction * a_eff;
    let mut v_cmd = exec.commanded_speed(vehicle, control);
    if exec.traversal.is_none() && !uturning {
        let d_end = (map.road(road_idx).length() - v.lane.s).max(0.0);
        if available_exit(map, road_idx, exec.pending_turn).is_none() {
            v_cmd = v_cmd.min(braking_cap(a_comf, d_end - 1.0));
        }
        if control.auto_safety_stop {
            for sign in visible_signs(world) {
                if sign.name == "traffic light" && sign.state == "red" {
                    let d = sign.distance;
                    let can_stop = v.speed * v.speed / (2.0 * a_eff) <= d + 0.5;
                    if d <= control.red_light_window && can_stop {
                        v_cmd = 0.0;
                    } else if can_stop {
                        v_cmd = v_cmd.min(braking_cap(a_comf, d - 2.0));
                    }
                }
            }
        }
    }
    if control.auto_safety_stop {
        if let Some((_, d)) = front_object(map, world) {
            v_cmd = if d <= control.safety_gap { 0.0 } else { v_cmd.min(braking_cap(a_comf, d - control.safety_gap)) };
        }
    }

    let throttle = if exec.maneuver == Maneuver::Stopped || v_cmd == 0.0 {
        if v.speed >= 0.1 {
            if exec.maneuver == Maneuver::Stopped {
                -1.0
            } else {
                control.speed_gain * (0.0 - v.speed)
            }
        } else {
            0.0
        }
    } else {
        control.speed_gain * (v_cmd - v.speed)
    };
    Ok(ControlCommand::new(throttle, steer))
}

fn lookahead_point(
    exec: &ExecutorState,
    v: &VehicleState,
    map: &MapGraph,
    road_idx: RoadIdx,
    lookahead: f64,
    control: &ControlParams,
) -> Vec2 {
    if let Some(t) = &exec.traversal {
        let along = t.connector.project(v.position, 0.0).s + lookahead;
        let len = t.connector.length();
        if along <= len {
            return t.connector.point_at(along, 0.0);
        }
        let exit = map.road_idx(&t.exit_road).expect("traversal exit exists");
        let off = lane_center(map, exit, t.exit_lane);
        return map.road(exit).centerline.point_at(along - len, off);
    }
    let road = map.road(road_idx);
    let offset = match exec.maneuver {
        Maneuver::Switching { from_lane, to_lane, progress, .. } => {
            let ahead = lookahead / v.speed.max(1.0) / control.lane_switch_duration;
            let w = cosine_blend(progress + ahead);
            let a = lane_center(map, road_idx, from_lane);
            let b = lane_center(map, road_idx, to_lane);
            a + (b - a) * w
        }
        _ => lane_center(map, road_idx, exec.lane),
    };
    road.centerline.point_at(v.lane.s + lookahead, offset)
}

/// Steering toward `target`; positive steers left.
fn pure_pursuit(v: &VehicleState, target: Vec2, params: &VehicleParams) -> f64 {
    let d = target - v.position;
    let dist = d.norm();
    if dist < 1e-9 {
        return 0.0;
    }
    let fwd = Vec2::from_heading(v.heading);
    let alpha = fwd.cross(d).atan2(fwd.dot(d));
    let delta = (2.0 * params.wheelbase * alpha.sin() / dist).atan();
    delta / params.max_steer()
}

/// Re-anchors the vehicle's lane location after a motion step, advances
/// maneuver progress, and handles junction entry and exit.
pub fn update_tracking(
    exec: &mut ExecutorState,
    vehicle: &mut VehicleState,
    map: &MapGraph,
    dt: f64,
    control: &ControlParams,
) -> Result<Vec<TrackingEvent>, MotionError> {
    let mut events = Vec::new();
    vehicle.lights_on = exec.lights_on;
    vehicle.cruise_kmh = exec.target_cruise_kmh;

    if let Maneuver::UTurning { target_road, progress } = exec.maneuver.clone() {
        let target_idx = map.road_idx(&target_road).expect("target road exists");
        let proj = locate_on_road(map, target_idx, vehicle.position);
        let road_heading = map.road(target_idx).centerline.heading_at(proj.location.s);
        let remaining = wrap_angle(road_heading - vehicle.heading).abs();
        let progress = (1.0 - remaining / PI).max(progress).clamp(0.0, 1.0);
        if remaining < 10f64.to_radians() {
            exec.lane = proj.location.lane;
            vehicle.lane = proj.location;
            vehicle.in_junction = false;
            exec.maneuver = Maneuver::Following;
            events.push(TrackingEvent::UTurnCompleted { road: target_road });
        } else {
            exec.maneuver = Maneuver::UTurning { target_road, progress };
        }
        return Ok(events);
    }

    if let Some(t) = &exec.traversal {
        let proj = t.connector.project(vehicle.position, 0.0);
        if proj.s_unclamped >= t.connector.length() - 1e-6 {
            let exit = map.road_idx(&t.exit_road).expect("traversal exit exists");
            let loc = locate_on_road(map, exit, vehicle.position);
            let road = t.exit_road.clone();
            exec.lane = t.exit_lane;
            exec.traversal = None;
            vehicle.in_junction = false;
            vehicle.lane = loc.location;
            events.push(TrackingEvent::ExitedJunction { road });
        } else {
            if proj.distance > ON_ROAD_TOLERANCE {
                return Err(MotionError::OffRoad { x: vehicle.position.x, y: vehicle.position.y });
            }
            return Ok(events);
        }
    }

    if let Maneuver::Switching { direction, from_lane, to_lane, progress } = exec.maneuver {
        let p = progress + dt / control.lane_switch_duration;
        if p >= 1.0 {
            exec.lane = to_lane;
            exec.maneuver = Maneuver::Following;
            events.push(TrackingEvent::SwitchCompleted { lane: to_lane });
        } else {
            exec.maneuver = Maneuver::Switching { direction, from_lane, to_lane, progress: p };
        }
    }

    let road_idx = map
        .road_idx(&vehicle.lane.road)
        .ok_or_else(|| MotionError::World(crate::world::WorldError::UnknownRoad(vehicle.lane.road.clone())))?;
    let proj = locate_on_road(map, road_idx, vehicle.position);
    let road = map.road(road_idx);
    if proj.s_unclamped >= road.length() {
        if let Some((exit, turn)) = available_exit(map, road_idx, exec.pending_turn) {
            let lane = exit_lane(map, exit, turn, exec.lane);
            let exit_road = map.road(exit);
            let p1 = exit_road.centerline.point_at(0.0, lane_center(map, exit, lane));
            let h1 = exit_road.start_heading();
            let chord = vehicle.position.dist(p1);
            let connector = hermite(vehicle.position, vehicle.heading, p1, h1, chord.max(0.5), 24);
            let junction = map.end_junction(road_idx).map(|j| j.id.clone()).unwrap_or_default();
            if let Maneuver::Switching { .. } = exec.maneuver {
                exec.maneuver = Maneuver::Following;
            }
            exec.pending_turn = None;
            exec.lane = lane;
            exec.traversal = Some(JunctionTraversal {
                junction: junction.clone(),
                exit_road: exit_road.id.clone(),
                exit_lane: lane,
                turn,
                connector,
            });
            vehicle.in_junction = true;
            vehicle.lane = LaneLocation { road: exit_road.id.clone(), lane, s: 0.0, offset: 0.0 };
            events.push(TrackingEvent::EnteredJunction { junction, exit_road: exit_road.id.clone(), turn });
            return Ok(events);
        }
    }
    if proj.location.offset.abs() > ON_ROAD_TOLERANCE {
        return Err(MotionError::OffRoad { x: vehicle.position.x, y: vehicle.position.y });
    }
    vehicle.lane = proj.location;
    vehicle.in_junction = false;
    Ok(events)
}
