//! Reconstruction from session logs: deterministic replay, request
//! rebuilding, dataset export and teacher-forced evaluation.

use std::collections::HashMap;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::harness::{
    build_decision_request, run_decision_cycle, ActionRecord, AgentBackend, AgentDecision, CycleContext,
    DecisionRequest, DialogueEvent, HarnessError, LogReplayAgent, PrivilegedState, RequestOptions, Session, Snapshot,
    Speaker, TaskKind,
};
use crate::metrics::PredictionItem;
use crate::motion::PhysicalAction;
use crate::planner::{PlanCall, PlanOptions};
use crate::world::{MapGraph, WorldError, WorldState};

use super::{EventKind, LogError, LogEvent, SessionLog, UtteranceSource};

pub const DATA_SCHEMA: &str = "sdnloop-data/1";

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error(transparent)]
    Log(#[from] LogError),
    #[error("log map is invalid: {0}")]
    Map(#[from] WorldError),
    #[error(transparent)]
    Harness(#[from] HarnessError),
    #[error("corrupt log at event {offset}: {message}")]
    Corrupt { offset: usize, message: String },
    #[error("replay diverged from the log at event {offset}")]
    Diverged { offset: usize, expected: String, found: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("dataset line {line}: {message}")]
    Dataset { line: usize, message: String },
}

/// Annotated decision at one decision point.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GoldDecision {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plan_call: Option<PlanCall>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plan: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub action: Option<PhysicalAction>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub utterance: Option<String>,
    #[serde(rename = "move", default, skip_serializing_if = "Option::is_none")]
    pub dialogue_move: Option<String>,
}

impl From<&AgentDecision> for GoldDecision {
    fn from(d: &AgentDecision) -> Self {
        Self {
            plan_call: d.plan_call.clone(),
            plan: d.plan.clone(),
            action: d.action,
            utterance: d.utterance.clone(),
            dialogue_move: d.dialogue_move.clone(),
        }
    }
}

/// A decision point rebuilt from the log prefix.
#[derive(Debug, Clone)]
pub struct RebuiltDecision {
    /// Position of the decision event in the log.
    pub offset: usize,
    pub index: usize,
    pub request: DecisionRequest,
    pub world: WorldState,
    pub gold: GoldDecision,
    /// Judged goal as known strictly before the decision time.
    pub goal: String,
    /// A human utterance arrived since the previous decision.
    pub responds_to_human: bool,
}

fn log_map(log: &SessionLog) -> Result<Arc<MapGraph>, ReplayError> {
    Ok(Arc::new(MapGraph::from_document(log.header()?.map.clone())?))
}

/// Rebuilds every decision request from the world snapshot and the log
/// prefix, checking each against the recorded request digest.
pub fn rebuild_requests(log: &SessionLog) -> Result<Vec<RebuiltDecision>, ReplayError> {
    let header = log.header()?;
    let map = log_map(log)?;
    let opts = RequestOptions::from_config(&header.config);
    let initial_goal = header.story.final_goal().to_string();
    let mut goal_changes: Vec<(f64, String)> = Vec::new();
    let mut dialogue: Vec<DialogueEvent> = Vec::new();
    let mut actions: Vec<ActionRecord> = Vec::new();
    let mut snapshot: Option<(f64, Snapshot)> = None;
    let mut prev_tau = f64::NEG_INFINITY;
    let mut out = Vec::new();
    for (offset, event) in log.events.iter().enumerate() {
        match event {
            LogEvent::Utterance { t, speaker, text, dialogue_move, .. } => dialogue.push(DialogueEvent {
                t: *t,
                speaker: *speaker,
                utterance: text.clone(),
                dialogue_move: dialogue_move.clone(),
            }),
            LogEvent::ActionApplied { t, action, ok: true, .. } => {
                actions.push(ActionRecord { t: *t, action: *action })
            }
            LogEvent::WorldSnapshot { t, world, exec } => {
                snapshot = Some((*t, Snapshot { world: world.clone(), exec: exec.clone() }))
            }
            LogEvent::ScenarioEvent { t, event: EventKind::GoalChange { goal: g, .. }, .. } => {
                goal_changes.push((*t, g.clone()))
            }
            LogEvent::Decision { tau, task, request, decision, .. } => {
                let corrupt = |message: String| ReplayError::Corrupt { offset, message };
                let (t, snap) = snapshot
                    .as_ref()
                    .filter(|(t, _)| (t - tau).abs() < 1e-9)
                    .ok_or_else(|| corrupt(format!("no world snapshot at decision time {tau}")))?;
                let req = build_decision_request(&map, snap, &dialogue, &actions, *t, *task, &opts)?;
                if req.digest() != *request {
                    return Err(corrupt(format!("rebuilt request at t = {tau} does not match the recorded digest")));
                }
                let goal = goal_changes.iter().rev().find(|(t, _)| t < tau).map_or(&initial_goal, |(_, g)| g);
                let responds_to_human =
                    dialogue.iter().any(|d| d.speaker == Speaker::Human && d.t >= prev_tau && d.t < *tau);
                prev_tau = *tau;
                out.push(RebuiltDecision {
                    offset,
                    index: out.len(),
                    request: req,
                    world: snap.world.clone(),
                    gold: GoldDecision::from(decision),
                    goal: goal.clone(),
                    responds_to_human,
                });
            }
            _ => {}
        }
    }
    Ok(out)
}

/// Result of re-running a logged session.
#[derive(Debug, Clone)]
pub struct ReplayReport {
    pub log: SessionLog,
    /// World snapshot at every decision point.
    pub snapshots: Vec<(f64, WorldState)>,
}

fn tau_key(tau: f64) -> i64 {
    (tau * 1e6).round() as i64
}

/// Re-runs the session from the log header, answering each decision with
/// the recorded replies at the recorded latency, and checks that the new
/// log is identical event by event.
pub fn replay_session(log: &SessionLog) -> Result<ReplayReport, ReplayError> {
    let header = log.header()?;
    log.outcome()?;
    let map = log_map(log)?;
    let mut agent = LogReplayAgent::from_log(log);
    let mut latencies = HashMap::new();
    let mut session = Session::new(map, header.story.clone(), header.config.clone(), &header.agent, Some(header.seed))?;
    for e in &log.events {
        match e {
            LogEvent::Decision { tau, latency, .. } => {
                latencies.insert(tau_key(*tau), *latency);
            }
            LogEvent::Utterance { t, text, source: UtteranceSource::Inbox, .. } => {
                session.schedule_human(*t, text.clone())
            }
            LogEvent::ScenarioEvent { t, index, event } if *index >= header.story.events.len() => {
                session.schedule_wizard(*t, event.clone())
            }
            _ => {}
        }
    }
    let _ = crate::harness::drive_session(&mut session, &mut agent, |tau| {
        latencies.get(&tau_key(tau)).copied().unwrap_or(0.0)
    });
    let replayed = session.into_log();
    for (offset, (a, b)) in log.events.iter().zip(&replayed.events).enumerate() {
        if a != b {
            return Err(ReplayError::Diverged {
                offset,
                expected: serde_json::to_string(a).unwrap_or_default(),
                found: serde_json::to_string(b).unwrap_or_default(),
            });
        }
    }
    if log.events.len() != replayed.events.len() {
        let offset = log.events.len().min(replayed.events.len());
        return Err(ReplayError::Diverged {
            offset,
            expected: format!("{} events", log.events.len()),
            found: format!("{} events", replayed.events.len()),
        });
    }
    let snapshots = replayed
        .events
        .iter()
        .filter_map(|e| match e {
            LogEvent::WorldSnapshot { t, world, .. } => Some((*t, world.clone())),
            _ => None,
        })
        .collect();
    Ok(ReplayReport { log: replayed, snapshots })
}

/// One instruction-pair record of the exported dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExportRecord {
    pub v: String,
    pub id: String,
    pub tau: f64,
    pub task: TaskKind,
    pub observation: String,
    pub map_text: String,
    pub dialogue: Vec<DialogueEvent>,
    pub actions: Vec<ActionRecord>,
    #[serde(default)]
    pub frames: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub privileged: Option<PrivilegedState>,
    pub gold: GoldDecision,
    pub goal: String,
    pub responds_to_human: bool,
}

impl ExportRecord {
    /// The phase-one request this record was exported from.
    pub fn request(&self) -> DecisionRequest {
        DecisionRequest {
            tau: self.tau,
            task: self.task,
            phase: 1,
            observation: self.observation.clone(),
            dialogue: self.dialogue.clone(),
            actions: self.actions.clone(),
            map_text: self.map_text.clone(),
            plan: None,
            frames: self.frames.clone(),
            q1_answer: None,
            privileged: self.privileged.clone(),
        }
    }
}

/// One record per decision point, in log order.
pub fn export_instruction_pairs(log: &SessionLog) -> Result<Vec<ExportRecord>, ReplayError> {
    if log.events.is_empty() {
        return Ok(Vec::new());
    }
    let story = log.header()?.story.id.clone();
    Ok(rebuild_requests(log)?
        .into_iter()
        .map(|d| ExportRecord {
            v: DATA_SCHEMA.to_string(),
            id: format!("{story}-{:04}", d.index),
            tau: d.request.tau,
            task: d.request.task,
            observation: d.request.observation,
            map_text: d.request.map_text,
            dialogue: d.request.dialogue,
            actions: d.request.actions,
            frames: d.request.frames,
            privileged: d.request.privileged,
            gold: d.gold,
            goal: d.goal,
            responds_to_human: d.responds_to_human,
        })
        .collect())
}

pub fn write_dataset(records: &[ExportRecord], path: &Path) -> Result<(), ReplayError> {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("records serialize"));
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

pub fn read_dataset(path: &Path) -> Result<Vec<ExportRecord>, ReplayError> {
    let text = std::fs::read_to_string(path)?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let r: ExportRecord =
                serde_json::from_str(l).map_err(|e| ReplayError::Dataset { line: i + 1, message: e.to_string() })?;
            if r.v != DATA_SCHEMA {
                return Err(ReplayError::Dataset { line: i + 1, message: format!("unsupported version {:?}", r.v) });
            }
            Ok(r)
        })
        .collect()
}

fn action_payload(a: Option<PhysicalAction>) -> serde_json::Value {
    serde_json::to_value(a).expect("actions serialize")
}

fn response_payload(utterance: Option<&str>, dialogue_move: Option<&str>) -> serde_json::Value {
    serde_json::json!({ "move": dialogue_move, "utterance": utterance })
}

/// Queries `agent` at every recorded decision point with the request
/// rebuilt from the gold log prefix and question one forced to the gold
/// answer. Produces an NfD item per decision with a gold action, and an RfN
/// item per decision that answered a new human utterance.
pub fn teacher_forcing_replay(
    log: &SessionLog,
    agent: &mut dyn AgentBackend,
) -> Result<Vec<PredictionItem>, ReplayError> {
    if log.events.is_empty() {
        return Ok(Vec::new());
    }
    let header = log.header()?;
    let cfg = &header.config;
    let map = log_map(log)?;
    let story = &header.story.id;
    let plan = PlanOptions { allow_initial_uturn: cfg.allow_initial_uturn, uturn_penalty: cfg.initial_uturn_penalty };
    let mut items = Vec::new();
    for d in rebuild_requests(log)? {
        let forced = d.gold.action.map(|a| a.kind().name().to_string());
        let ctx = CycleContext {
            map: &map,
            world: &d.world,
            plan,
            move_set: &cfg.move_set,
            timeout_s: cfg.agent_timeout_s,
            latency_s: 0.0,
            forced_q1: forced,
        };
        let pred = run_decision_cycle(agent, &ctx, d.request.clone()).decision;
        if d.gold.action.is_some() {
            items.push(PredictionItem {
                id: format!("{story}-{:04}-nfd", d.index),
                task: TaskKind::NfD.label().to_string(),
                gold: action_payload(d.gold.action),
                pred: action_payload(pred.action),
            });
        }
        if d.responds_to_human && d.gold.utterance.is_some() {
            items.push(PredictionItem {
                id: format!("{story}-{:04}-rfn", d.index),
                task: TaskKind::RfN.label().to_string(),
                gold: response_payload(d.gold.utterance.as_deref(), d.gold.dialogue_move.as_deref()),
                pred: response_payload(pred.utterance.as_deref(), pred.dialogue_move.as_deref()),
            });
        }
    }
    Ok(items)
}
