//! Resolving the simulation config, maps and storyboards named on the
//! command line.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use sdnloop::assets::load_bundled_map;
use sdnloop::config::SimConfig;
use sdnloop::scenario::{bundled_story, Storyboard};
use sdnloop::world::MapGraph;
use thiserror::Error;

/// Environment variable naming the default config document.
pub const CONFIG_ENV: &str = "SDNLOOP_CONFIG";

#[derive(Debug, Error)]
pub enum InputError {
    #[error("storyboard not found: {0}")]
    StoryNotFound(String),
    #[error("map not found: {0}")]
    MapNotFound(String),
    #[error("cannot read {}", path.display())]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{origin}: {message}")]
    Invalid { origin: String, message: String },
}

/// Rate overrides given as flags; they win over the config document.
#[derive(Debug, Clone, Copy, Default)]
pub struct RateOverrides {
    pub tick_hz: Option<u32>,
    pub decision_hz: Option<u32>,
}

fn read(path: &Path) -> Result<String, InputError> {
    std::fs::read_to_string(path).map_err(|source| InputError::Read { path: path.to_path_buf(), source })
}

/// Loads the config document at `path` (defaults when `None`), applies the
/// rate overrides and validates the result.
pub fn load_config(path: Option<&Path>, rates: RateOverrides) -> Result<SimConfig, InputError> {
    let origin = path.map(|p| p.display().to_string()).unwrap_or_else(|| "default config".into());
    let invalid = |message: String| InputError::Invalid { origin: origin.clone(), message };
    let mut cfg = match path {
        Some(p) => SimConfig::from_json(&read(p)?).map_err(|e| invalid(e.to_string()))?,
        None => SimConfig::default(),
    };
    if let Some(hz) = rates.tick_hz {
        cfg.tick_hz = hz;
    }
    if let Some(hz) = rates.decision_hz {
        cfg.decision_hz = hz;
    }
    cfg.validate().map_err(|e| invalid(e.to_string()))?;
    Ok(cfg)
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub map: Arc<MapGraph>,
    pub story: Storyboard,
}

fn looks_like_path(arg: &str) -> bool {
    arg.contains('/') || arg.contains('\\') || arg.ends_with(".json")
}

/// Resolves a storyboard given as a file path or a bundled name. Bundled
/// names may omit the map prefix when `--map` names a bundled map, so
/// `--map townA --story goal_change` finds `townA_goal_change`.
fn resolve_story(story: &str, map: Option<&str>) -> Result<(Storyboard, Option<PathBuf>), InputError> {
    let path = Path::new(story);
    let (text, origin) = if path.is_file() {
        (read(path)?, Some(path.to_path_buf()))
    } else if looks_like_path(story) {
        return Err(InputError::StoryNotFound(story.to_string()));
    } else {
        let prefixed = map.map(|m| format!("{m}_{story}"));
        let text = bundled_story(story)
            .or_else(|| prefixed.as_deref().and_then(bundled_story))
            .ok_or_else(|| InputError::StoryNotFound(story.to_string()))?;
        (text.to_string(), None)
    };
    let parsed = Storyboard::from_json(&text)
        .map_err(|e| InputError::Invalid { origin: story.to_string(), message: e.to_string() })?;
    Ok((parsed, origin))
}

/// Resolves a map given as a file path (also tried relative to the
/// storyboard's directory) or a bundled name.
fn resolve_map(map: &str, story_dir: Option<&Path>) -> Result<MapGraph, InputError> {
    let invalid = |message: String| InputError::Invalid { origin: map.to_string(), message };
    let candidates = [Some(PathBuf::from(map)), story_dir.map(|d| d.join(map))];
    if let Some(p) = candidates.into_iter().flatten().find(|p| p.is_file()) {
        return MapGraph::from_json(&read(&p)?).map_err(|e| invalid(e.to_string()));
    }
    match load_bundled_map(map) {
        Some(loaded) => loaded.map_err(|e| invalid(e.to_string())),
        None => Err(InputError::MapNotFound(map.to_string())),
    }
}

/// Loads the storyboard and its map. Without `map` the storyboard's own
/// `map` field is used.
pub fn resolve_scenario(map: Option<&str>, story: &str) -> Result<Scenario, InputError> {
    let (story, origin) = resolve_story(story, map)?;
    let story_dir = origin.as_deref().and_then(Path::parent);
    let map = resolve_map(map.unwrap_or(&story.map), story_dir)?;
    story.validate(&map).map_err(|e| InputError::Invalid { origin: story.id.clone(), message: e.to_string() })?;
    Ok(Scenario { map: Arc::new(map), story })
}
