use serde::{Deserialize, Serialize};

use super::map::MapGraph;
use super::WorldError;
use crate::geometry::{Footprint, Vec2};

/// Position on a road in lane coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaneLocation {
    pub road: String,
    /// 1-based lane index from the left.
    pub lane: u32,
    /// Arc length along the road centerline.
    pub s: f64,
    /// Offset from the lane center; negative is left of travel direction.
    pub offset: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Weather {
    Clear,
    Rain,
    Fog,
    NightClear,
    NightRain,
}

impl Weather {
    pub fn label(self) -> &'static str {
        match self {
            Weather::Clear => "clear",
            Weather::Rain => "rain",
            Weather::Fog => "fog",
            Weather::NightClear => "night-clear",
            Weather::NightRain => "night-rain",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [Weather::Clear, Weather::Rain, Weather::Fog, Weather::NightClear, Weather::NightRain]
            .into_iter()
            .find(|w| w.label().eq_ignore_ascii_case(s.trim()))
    }

    /// Conditions that reduce available acceleration.
    pub fn is_slippery(self) -> bool {
        matches!(self, Weather::Rain | Weather::Fog | Weather::NightRain)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VehicleState {
    /// Rear-axle reference point.
    pub position: Vec2,
    pub heading: f64,
    /// m/s
    pub speed: f64,
    /// km/h
    pub cruise_kmh: f64,
    pub lights_on: bool,
    /// While `in_junction` this is the committed exit road at s = 0.
    pub lane: LaneLocation,
    #[serde(default)]
    pub in_junction: bool,
}

impl VehicleState {
    /// Stationary vehicle on a lane center, aligned with the road.
    pub fn on_lane(map: &MapGraph, loc: LaneLocation, cruise_kmh: f64) -> Result<Self, WorldError> {
        let position = super::query::position_of(map, &loc)?;
        let road = map.road_by_id(&loc.road).ok_or_else(|| WorldError::UnknownRoad(loc.road.clone()))?;
        Ok(VehicleState {
            position,
            heading: road.centerline.heading_at(loc.s),
            speed: 0.0,
            cruise_kmh,
            lights_on: false,
            lane: loc,
            in_junction: false,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Obstacle {
    pub kind: String,
    pub footprint: Footprint,
    /// Scripted constant speed along the footprint heading, m/s.
    #[serde(default)]
    pub speed: f64,
    /// Simulation time at which the obstacle disappears.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub remove_at: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrafficSign {
    pub name: String,
    pub state: String,
    pub position: Vec2,
    pub road: String,
    pub s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LightPhase {
    Red,
    Green,
}

impl LightPhase {
    pub fn label(self) -> &'static str {
        match self {
            LightPhase::Red => "red",
            LightPhase::Green => "green",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrafficLight {
    pub id: String,
    pub junction: String,
    /// Approach road; the light stands at its end.
    pub road: String,
    pub s: f64,
    pub position: Vec2,
    pub phase: LightPhase,
    pub green_s: f64,
    pub red_s: f64,
    pub offset_s: f64,
}

impl TrafficLight {
    pub fn phase_at(&self, t: f64) -> LightPhase {
        let cycle = self.green_s + self.red_s;
        let k = (t + self.offset_s).rem_euclid(cycle);
        if k < self.green_s {
            LightPhase::Green
        } else {
            LightPhase::Red
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldState {
    pub time: f64,
    pub vehicle: VehicleState,
    pub weather: Weather,
    pub obstacles: Vec<Obstacle>,
    pub signs: Vec<TrafficSign>,
    pub lights: Vec<TrafficLight>,
    /// Distance from the ego reference point to its front bumper, used for
    /// clearance measurements.
    #[serde(default = "default_front_reach")]
    pub ego_front_reach: f64,
}

/// Half wheelbase plus half body length for the default vehicle.
pub const DEFAULT_EGO_FRONT_REACH: f64 = 2.9 / 2.0 + 4.6 / 2.0;

fn default_front_reach() -> f64 {
    DEFAULT_EGO_FRONT_REACH
}

impl WorldState {
    /// World at t = 0 with the map's signs and lights instantiated.
    pub fn new(map: &MapGraph, vehicle: VehicleState, weather: Weather) -> Self {
        let doc = map.document();
        let signs = doc
            .signs
            .iter()
            .map(|s| {
                let road = map.road_by_id(&s.road).expect("validated");
                let edge = road.lanes.last().map(|l| l.center_offset + l.width / 2.0).unwrap_or(0.0);
                TrafficSign {
                    name: s.name.clone(),
                    state: s.state.clone(),
                    position: road.centerline.point_at(s.s, edge + 0.5),
                    road: s.road.clone(),
                    s: s.s,
                }
            })
            .collect();
        let lights = doc
            .lights
            .iter()
            .map(|l| {
                let idx = map.road_idx(&l.road).expect("validated");
                let road = map.road(idx);
                let edge = road.lanes.last().map(|l| l.center_offset + l.width / 2.0).unwrap_or(0.0);
                let mut light = TrafficLight {
                    id: l.id.clone(),
                    junction: map.end_junction(idx).map(|j| j.id.clone()).unwrap_or_default(),
                    road: l.road.clone(),
                    s: road.length(),
                    position: road.centerline.point_at(road.length(), edge + 0.5),
                    phase: LightPhase::Green,
                    green_s: l.green_s,
                    red_s: l.red_s,
                    offset_s: l.offset_s,
                };
                light.phase = light.phase_at(0.0);
                light
            })
            .collect();
        WorldState {
            time: 0.0,
            vehicle,
            weather,
            obstacles: Vec::new(),
            signs,
            lights,
            ego_front_reach: DEFAULT_EGO_FRONT_REACH,
        }
    }
}

/// Advances time, scripted obstacle motion and light phases. The ego vehicle
/// is moved by the motion controller, not here.
pub fn step_world(world: &WorldState, dt: f64) -> Result<WorldState, WorldError> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(WorldError::InvalidStep(dt));
    }
    let mut next = world.clone();
    // Microsecond grid keeps long runs free of accumulated drift.
    next.time = ((world.time + dt) * 1e6).round() / 1e6;
    let t = next.time;
    next.obstacles.retain(|o| o.remove_at.is_none_or(|r| t < r));
    for o in &mut next.obstacles {
        if o.speed != 0.0 {
            o.footprint.center = o.footprint.center + Vec2::from_heading(o.footprint.heading).scale(o.speed * dt);
        }
    }
    for l in &mut next.lights {
        l.phase = l.phase_at(t);
    }
    Ok(next)
}
