//! Bundled maps and storyboards.

use crate::world::{MapGraph, WorldError};

pub const MAP_TOWN_A: &str = include_str!("../assets/maps/townA.json");
pub const MAP_TOWN_B: &str = include_str!("../assets/maps/townB.json");
pub const MAP_GRID_2X2: &str = include_str!("../assets/maps/grid2x2.json");
pub const MAP_TRACK: &str = include_str!("../assets/maps/track.json");
pub const MAP_STRAIGHT: &str = include_str!("../assets/maps/straight.json");

pub const VERBALIZER_GOLDENS: &str = include_str!("../assets/goldens/verbalizer.json");

/// (file stem, document) for every bundled storyboard.
pub const STORIES: [(&str, &str); 10] = [
    ("townA_long_horizon", include_str!("../assets/stories/townA_long_horizon.json")),
    ("townA_short_horizon", include_str!("../assets/stories/townA_short_horizon.json")),
    ("townA_weather_change", include_str!("../assets/stories/townA_weather_change.json")),
    ("townA_goal_change", include_str!("../assets/stories/townA_goal_change.json")),
    ("townA_obstacle", include_str!("../assets/stories/townA_obstacle.json")),
    ("townB_long_horizon", include_str!("../assets/stories/townB_long_horizon.json")),
    ("townB_short_horizon", include_str!("../assets/stories/townB_short_horizon.json")),
    ("townB_weather_change", include_str!("../assets/stories/townB_weather_change.json")),
    ("townB_goal_change", include_str!("../assets/stories/townB_goal_change.json")),
    ("townB_obstacle", include_str!("../assets/stories/townB_obstacle.json")),
];

/// (name, document) for every bundled map.
pub const MAPS: [(&str, &str); 5] = [
    ("townA", MAP_TOWN_A),
    ("townB", MAP_TOWN_B),
    ("grid2x2", MAP_GRID_2X2),
    ("track", MAP_TRACK),
    ("straight", MAP_STRAIGHT),
];

pub fn map_document(name: &str) -> Option<&'static str> {
    MAPS.iter().find(|(n, _)| n.eq_ignore_ascii_case(name)).map(|(_, d)| *d)
}

/// Loads a bundled map by name.
pub fn load_bundled_map(name: &str) -> Option<Result<MapGraph, WorldError>> {
    map_document(name).map(MapGraph::from_json)
}
