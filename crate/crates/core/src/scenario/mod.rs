//! Storyboards, wizard event injection, session logs, success judging,
//! replay and dataset export.

mod export;
mod log;
mod story;

use thiserror::Error;

pub use export::{
    export_instruction_pairs, read_dataset, rebuild_requests, replay_session, teacher_forcing_replay, write_dataset,
    ExportRecord, GoldDecision, RebuiltDecision, ReplayError, ReplayReport, DATA_SCHEMA,
};
pub use log::{judge_success, LogError, LogEvent, LogHeader, SessionLog, UtteranceSource, LOG_SCHEMA};
pub use story::{place_obstacle, EventKind, InstructionStyle, ScenarioEvent, Spawn, Storyboard, Trigger, STORY_SCHEMA};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("invalid storyboard: {0}")]
    Story(String),
    #[error("cannot place obstacle: {0}")]
    Placement(String),
}

/// Bundled storyboard by file stem, e.g. `townA_goal_change`.
pub fn bundled_story(name: &str) -> Option<&'static str> {
    crate::assets::STORIES.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}
