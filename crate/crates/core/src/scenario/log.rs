//! Session log (`sdnloop-log/1`): one JSON event per line, starting with a
//! header and ending with exactly one outcome.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::config::SimConfig;
use crate::harness::{AgentDecision, AgentReply, ExecSummary, Speaker, TaskKind};
use crate::motion::PhysicalAction;
use crate::world::{MapDocument, MapGraph, VehicleState, WorldState};

use super::{EventKind, Storyboard};

pub const LOG_SCHEMA: &str = "sdnloop-log/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogHeader {
    pub v: String,
    pub story: Storyboard,
    pub map: MapDocument,
    pub config: SimConfig,
    pub agent: String,
    pub seed: u64,
}

/// Where an utterance entered the session.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UtteranceSource {
    /// Scripted by the storyboard.
    Story,
    /// Typed by a human through the input channel.
    Inbox,
    /// Part of an event injected by the wizard.
    Wizard,
    Agent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LogEvent {
    Header(LogHeader),
    Utterance {
        t: f64,
        speaker: Speaker,
        text: String,
        #[serde(rename = "move", default, skip_serializing_if = "Option::is_none")]
        dialogue_move: Option<String>,
        source: UtteranceSource,
    },
    Decision {
        t: f64,
        tau: f64,
        /// Simulated agent latency, s.
        latency: f64,
        apply_at: f64,
        task: TaskKind,
        /// Digest of the phase-one request.
        request: String,
        replies: Vec<AgentReply>,
        decision: AgentDecision,
    },
    ActionApplied {
        t: f64,
        action: PhysicalAction,
        ok: bool,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        error: Option<String>,
    },
    WorldSnapshot {
        t: f64,
        world: WorldState,
        exec: ExecSummary,
    },
    ScenarioEvent {
        t: f64,
        index: usize,
        event: EventKind,
    },
    Outcome {
        t: f64,
        success: bool,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        reason: Option<String>,
        vehicle: VehicleState,
    },
}

impl LogEvent {
    pub fn time(&self) -> Option<f64> {
        match self {
            LogEvent::Header(_) => None,
            LogEvent::Utterance { t, .. }
            | LogEvent::Decision { t, .. }
            | LogEvent::ActionApplied { t, .. }
            | LogEvent::WorldSnapshot { t, .. }
            | LogEvent::ScenarioEvent { t, .. }
            | LogEvent::Outcome { t, .. } => Some(*t),
        }
    }
}

#[derive(Debug, Error)]
pub enum LogError {
    #[error("unsupported log version {0:?} (expected {LOG_SCHEMA})")]
    Version(String),
    #[error("log line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("incomplete log: {0}")]
    Incomplete(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SessionLog {
    pub events: Vec<LogEvent>,
}

impl SessionLog {
    pub fn header(&self) -> Result<&LogHeader, LogError> {
        match self.events.first() {
            Some(LogEvent::Header(h)) => Ok(h),
            _ => Err(LogError::Incomplete("missing header".into())),
        }
    }

    /// The outcome, which must be the final event.
    pub fn outcome(&self) -> Result<(f64, bool, Option<&str>, &VehicleState), LogError> {
        match self.events.last() {
            Some(LogEvent::Outcome { t, success, reason, vehicle }) => Ok((*t, *success, reason.as_deref(), vehicle)),
            _ => Err(LogError::Incomplete("log does not end with an outcome".into())),
        }
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.events {
            out.push_str(&serde_json::to_string(e).expect("log events serialize"));
            out.push('\n');
        }
        out
    }

    /// Parses JSON lines; the first line must be a `sdnloop-log/1` header.
    pub fn from_jsonl(text: &str) -> Result<Self, LogError> {
        let mut events = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            if i == 0 {
                let v: serde_json::Value =
                    serde_json::from_str(line).map_err(|e| LogError::Parse { line: 1, message: e.to_string() })?;
                let version = v.get("v").and_then(|v| v.as_str()).unwrap_or_default();
                if version != LOG_SCHEMA {
                    return Err(LogError::Version(version.to_string()));
                }
            }
            let event: LogEvent =
                serde_json::from_str(line).map_err(|e| LogError::Parse { line: i + 1, message: e.to_string() })?;
            events.push(event);
        }
        let log = SessionLog { events };
        log.header()?;
        Ok(log)
    }

    pub fn read(path: &std::path::Path) -> Result<Self, LogError> {
        Self::from_jsonl(&std::fs::read_to_string(path)?)
    }

    pub fn write(&self, path: &std::path::Path) -> Result<(), LogError> {
        std::fs::write(path, self.to_jsonl())?;
        Ok(())
    }

    /// SHA-256 of the JSON-lines encoding.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_jsonl().as_bytes()))
    }

    /// Goal judged at the end of the session: the storyboard's final goal,
    /// replaced by every goal change that fired.
    pub fn judged_goal(&self) -> Result<String, LogError> {
        let mut goal = self.header()?.story.final_goal().to_string();
        for e in &self.events {
            if let LogEvent::ScenarioEvent { event: EventKind::GoalChange { goal: g, .. }, .. } = e {
                goal = g.clone();
            }
        }
        Ok(goal)
    }
}

/// True iff the session ended before its timeout with the vehicle within
/// the arrival radius of the final judged goal's anchor and below the
/// arrival speed.
pub fn judge_success(log: &SessionLog, map: &MapGraph) -> Result<bool, LogError> {
    let header = log.header()?;
    let (t, _, _, vehicle) = log.outcome()?;
    let goal = log.judged_goal()?;
    let lm = map.landmark(&goal).ok_or_else(|| LogError::Incomplete(format!("goal {goal:?} is not on the map")))?;
    Ok(t <= header.story.timeout_s + 1e-9
        && vehicle.position.dist(lm.anchor) <= header.config.arrival_radius
        && vehicle.speed < header.config.arrival_speed)
}
