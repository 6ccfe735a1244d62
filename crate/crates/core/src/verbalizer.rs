//! Template rendering of the vehicle's surroundings into plain sentences.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::world::{
    distance_to_road_end, front_objects, lane_affordances, visible_signs, MapGraph, Weather, WorldError, WorldState,
};

pub const GOLDENS_SCHEMA: &str = "sdnloop-goldens/1";

#[derive(Debug, Error, PartialEq)]
pub enum VerbalizeError {
    #[error("distance must be non-negative and finite, got {0}")]
    InvalidDistance(f64),
    #[error("lane numbers start at 1")]
    InvalidLane,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceBucket {
    Far,
    Near,
    AtEnd,
}

/// `d = 10` is near and `d = 5` is at the end.
pub fn bucket_distance(d: f64) -> Result<DistanceBucket, VerbalizeError> {
    if !(d >= 0.0) || !d.is_finite() {
        return Err(VerbalizeError::InvalidDistance(d));
    }
    Ok(if d > 10.0 {
        DistanceBucket::Far
    } else if d > 5.0 {
        DistanceBucket::Near
    } else {
        DistanceBucket::AtEnd
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontObject {
    pub kind: String,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignReading {
    pub name: String,
    pub state: String,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Observation {
    pub distance_to_end: f64,
    pub lane: u32,
    pub can_switch_left: bool,
    pub can_switch_right: bool,
    #[serde(default)]
    pub front_objects: Vec<FrontObject>,
    #[serde(default)]
    pub signs: Vec<SignReading>,
    pub weather: Weather,
}

/// Reads the observation for the ego vehicle out of the world state.
pub fn observe(map: &MapGraph, world: &WorldState) -> Result<Observation, WorldError> {
    let loc = &world.vehicle.lane;
    let aff = lane_affordances(map, loc)?;
    Ok(Observation {
        distance_to_end: distance_to_road_end(map, loc)?,
        lane: aff.lane_number,
        can_switch_left: aff.can_switch_left,
        can_switch_right: aff.can_switch_right,
        front_objects: front_objects(map, world)
            .into_iter()
            .map(|(kind, distance)| FrontObject { kind, distance })
            .collect(),
        signs: visible_signs(world)
            .into_iter()
            .map(|s| SignReading { name: s.name, state: s.state, distance: s.distance })
            .collect(),
        weather: world.weather,
    })
}

/// Shortest rendering with at most one fractional digit: 8.0 -> "8".
pub fn format_distance(d: f64) -> String {
    let s = format!("{d:.1}");
    let s = s.strip_suffix(".0").map(str::to_string).unwrap_or(s);
    if s == "-0" {
        "0".to_string()
    } else {
        s
    }
}

fn check(d: f64) -> Result<(), VerbalizeError> {
    bucket_distance(d).map(|_| ())
}

pub fn verbalize(obs: &Observation) -> Result<String, VerbalizeError> {
    if obs.lane == 0 {
        return Err(VerbalizeError::InvalidLane);
    }
    let mut parts: Vec<String> = Vec::new();
    parts.push(
        match bucket_distance(obs.distance_to_end)? {
            DistanceBucket::Far => "I am far from the end of the road. I don't need to make a decision for turning now.",
            DistanceBucket::Near => "I am near the end of the road. I don't need to make a decision for turning now.",
            DistanceBucket::AtEnd => "I am at the end of the road, I need to stop if there is a red light, or make a decision to turn left, turn right, or go straight now.",
        }
        .to_string(),
    );
    parts.push(format!("I'm on the {} lane from the left of the road.", obs.lane));
    parts.push(
        match (obs.can_switch_left, obs.can_switch_right) {
            (false, false) => "I'm not able to change lane.",
            (false, true) => "I'm only able to change to the right lane.",
            (true, false) => "I'm only able to change to the left lane.",
            (true, true) => "I'm able to change to both right and left lane.",
        }
        .to_string(),
    );
    for o in &obs.front_objects {
        check(o.distance)?;
        parts.push(format!(
            "There is a obstacle {} in front of me, the distance is {}.",
            o.kind,
            format_distance(o.distance)
        ));
    }
    for s in &obs.signs {
        check(s.distance)?;
        parts.push(format!(
            "There is a {} that is {} meters from me, showing {}.",
            s.name,
            format_distance(s.distance),
            s.state
        ));
    }
    parts.push(format!("It's {}.", obs.weather.label()));
    Ok(parts.join(" "))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoldenCase {
    pub observation: Observation,
    pub expected: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoldenFile {
    pub schema: String,
    pub cases: Vec<GoldenCase>,
}
