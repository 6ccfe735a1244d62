//! Deterministic planar road world.

mod map;
mod query;
mod state;

pub use map::{
    normalize_name, ConnectionDoc, Junction, JunctionDoc, Landmark, LandmarkDoc, Lane, LaneDoc, LightDoc, MapDocument,
    MapGraph, Road, RoadDoc, RoadEnd, RoadIdx, SignDoc, MAP_SCHEMA, MAX_ANCHOR_DISTANCE,
};
pub use query::{
    distance_to_road_end, front_object, front_objects, lane_affordances, locate, locate_on_road, position_of,
    visible_signs, LaneAffordances, RoadProjection, VisibleSign, FRONT_HORIZON, ON_ROAD_TOLERANCE, SIGN_HORIZON,
};
pub use state::{
    step_world, LaneLocation, LightPhase, Obstacle, TrafficLight, TrafficSign, VehicleState, Weather, WorldState,
    DEFAULT_EGO_FRONT_REACH,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum WorldError {
    #[error("map schema violation: {0}")]
    Schema(String),
    #[error("map is not strongly connected: roads {unreachable:?} are not mutually reachable with {anchor}")]
    Connectivity { anchor: String, unreachable: Vec<String> },
    #[error("landmark {landmark} is {distance:.1} m from the nearest lane (max {max} m)", max = MAX_ANCHOR_DISTANCE)]
    AnchorTooFar { landmark: String, distance: f64 },
    #[error("position ({x:.2}, {y:.2}) is off-road")]
    OffRoad { x: f64, y: f64 },
    #[error("unknown road {0}")]
    UnknownRoad(String),
    #[error("road {road} has no lane {lane}")]
    InvalidLane { road: String, lane: u32 },
    #[error("time step must be positive, got {0}")]
    InvalidStep(f64),
}

#[cfg(test)]
mod tests;
