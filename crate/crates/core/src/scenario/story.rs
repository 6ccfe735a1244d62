//! Storyboards (`sdnloop-story/1`) and wizard events.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::Footprint;
use crate::world::{LaneLocation, MapGraph, Obstacle, Weather, WorldState};

use super::ScenarioError;

pub const STORY_SCHEMA: &str = "sdnloop-story/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstructionStyle {
    LongHorizon,
    ShortHorizon,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Spawn {
    pub road: String,
    #[serde(default = "one")]
    pub lane: u32,
    pub s: f64,
}

fn one() -> u32 {
    1
}

/// When an event fires. Spatial triggers fire on the first tick the vehicle
/// is on `road` with `s >= min_s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Trigger {
    Time {
        at_s: f64,
    },
    OnRoad {
        road: String,
        #[serde(default)]
        min_s: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum EventKind {
    /// A scripted passenger line.
    Utterance {
        text: String,
    },
    WeatherChange {
        weather: Weather,
    },
    GoalChange {
        goal: String,
        utterance: String,
    },
    /// Static obstacle `ahead_m` of clearance in front of the vehicle in its
    /// current lane, optionally removed again after `clear_after_s`.
    ObstacleAdd {
        object: String,
        ahead_m: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        clear_after_s: Option<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioEvent {
    pub trigger: Trigger,
    pub kind: EventKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Storyboard {
    pub schema: String,
    pub id: String,
    pub map: String,
    pub spawn: Spawn,
    pub goals: Vec<String>,
    #[serde(default)]
    pub events: Vec<ScenarioEvent>,
    pub style: InstructionStyle,
    pub timeout_s: f64,
    pub seed: u64,
    #[serde(default = "clear")]
    pub weather: Weather,
}

fn clear() -> Weather {
    Weather::Clear
}

impl Storyboard {
    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        let story: Storyboard = serde_json::from_str(text).map_err(|e| ScenarioError::Story(e.to_string()))?;
        if story.schema != STORY_SCHEMA {
            return Err(ScenarioError::Story(format!(
                "schema: expected \"{STORY_SCHEMA}\", found \"{}\"",
                story.schema
            )));
        }
        Ok(story)
    }

    /// Checks goals, event arguments and timing against the map.
    pub fn validate(&self, map: &MapGraph) -> Result<(), ScenarioError> {
        let bad = |m: String| Err(ScenarioError::Story(m));
        if self.goals.is_empty() {
            return bad("goals: at least one goal is required".into());
        }
        if !(self.timeout_s > 0.0) {
            return bad(format!("timeout_s must be positive, got {}", self.timeout_s));
        }
        for g in &self.goals {
            if map.landmark(g).is_none() {
                return bad(format!("goals: unknown landmark {g:?}"));
            }
        }
        let road = map
            .road_by_id(&self.spawn.road)
            .ok_or_else(|| ScenarioError::Story(format!("spawn.road: unknown road {:?}", self.spawn.road)))?;
        if road.lane(self.spawn.lane).is_none() || !(0.0..=road.length()).contains(&self.spawn.s) {
            return bad(format!("spawn: lane {} at s = {} is not on road {}", self.spawn.lane, self.spawn.s, road.id));
        }
        for (i, e) in self.events.iter().enumerate() {
            match &e.trigger {
                Trigger::Time { at_s } if *at_s < 0.0 || *at_s > self.timeout_s => {
                    return bad(format!("events[{i}]: trigger time {at_s} outside [0, {}]", self.timeout_s));
                }
                Trigger::OnRoad { road, .. } if map.road_by_id(road).is_none() => {
                    return bad(format!("events[{i}]: unknown road {road:?}"));
                }
                _ => {}
            }
            match &e.kind {
                EventKind::GoalChange { goal, .. } if map.landmark(goal).is_none() => {
                    return bad(format!("events[{i}]: unknown landmark {goal:?}"));
                }
                EventKind::ObstacleAdd { ahead_m, .. } if !(*ahead_m >= 0.0) => {
                    return bad(format!("events[{i}]: ahead_m must be non-negative"));
                }
                EventKind::Utterance { text } | EventKind::GoalChange { utterance: text, .. }
                    if text.trim().is_empty() =>
                {
                    return bad(format!("events[{i}]: empty utterance"));
                }
                _ => {}
            }
        }
        Ok(())
    }

    pub fn spawn_location(&self) -> LaneLocation {
        LaneLocation { road: self.spawn.road.clone(), lane: self.spawn.lane, s: self.spawn.s, offset: 0.0 }
    }

    /// Goal judged at the start of a run.
    pub fn final_goal(&self) -> &str {
        self.goals.last().map(String::as_str).unwrap_or_default()
    }
}

impl Trigger {
    pub fn satisfied(&self, world: &WorldState) -> bool {
        match self {
            Trigger::Time { at_s } => world.time + 1e-9 >= *at_s,
            Trigger::OnRoad { road, min_s } => {
                let loc = &world.vehicle.lane;
                !world.vehicle.in_junction && loc.road == *road && loc.s >= *min_s
            }
        }
    }
}

/// Obstacle footprint `ahead_m` of clearance ahead of the ego front bumper,
/// centred in the ego lane with up to ±0.25 m of seeded lateral jitter.
pub fn place_obstacle(
    map: &MapGraph,
    world: &WorldState,
    object: &str,
    ahead_m: f64,
    clear_after_s: Option<f64>,
    rng: &mut ChaCha8Rng,
) -> Result<Obstacle, ScenarioError> {
    const LENGTH: f64 = 4.6;
    const WIDTH: f64 = 1.9;
    let loc = &world.vehicle.lane;
    let road =
        map.road_by_id(&loc.road).ok_or_else(|| ScenarioError::Placement(format!("unknown road {}", loc.road)))?;
    let lane = road
        .lane(loc.lane)
        .ok_or_else(|| ScenarioError::Placement(format!("road {} has no lane {}", loc.road, loc.lane)))?;
    let s = loc.s + world.ego_front_reach + ahead_m + LENGTH / 2.0;
    if s > road.length() {
        return Err(ScenarioError::Placement(format!(
            "{ahead_m} m ahead is past the end of road {} ({:.1} m left)",
            road.id,
            road.length() - loc.s
        )));
    }
    let jitter = rng.random_range(-0.25..=0.25);
    Ok(Obstacle {
        kind: object.to_string(),
        footprint: Footprint {
            center: road.centerline.point_at(s, lane.center_offset + jitter),
            heading: road.centerline.heading_at(s),
            length: LENGTH,
            width: WIDTH,
        },
        speed: 0.0,
        remove_at: clear_after_s.map(|c| world.time + c),
    })
}
