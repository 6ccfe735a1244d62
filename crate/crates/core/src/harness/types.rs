use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::motion::{Direction, ExecutorState, PhysicalAction};
use crate::planner::PlanCall;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TaskKind {
    /// Navigation from dialogue: predict the physical action.
    NfD,
    /// Response for navigation: predict the dialogue move and utterance.
    RfN,
    #[serde(rename = "closed_loop")]
    ClosedLoop,
}

impl TaskKind {
    pub fn label(self) -> &'static str {
        match self {
            TaskKind::NfD => "NfD",
            TaskKind::RfN => "RfN",
            TaskKind::ClosedLoop => "closed_loop",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [TaskKind::NfD, TaskKind::RfN, TaskKind::ClosedLoop]
            .into_iter()
            .find(|k| k.label().eq_ignore_ascii_case(s.trim()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Speaker {
    Human,
    Agent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DialogueEvent {
    pub t: f64,
    pub speaker: Speaker,
    pub utterance: String,
    #[serde(rename = "move", default, skip_serializing_if = "Option::is_none")]
    pub dialogue_move: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionRecord {
    pub t: f64,
    pub action: PhysicalAction,
}

/// Executor fields that are not part of the world state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecSummary {
    pub maneuver: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pending_turn: Option<Direction>,
    pub target_cruise_kmh: f64,
}

impl From<&ExecutorState> for ExecSummary {
    fn from(e: &ExecutorState) -> Self {
        Self { maneuver: e.label().to_string(), pending_turn: e.pending_turn, target_cruise_kmh: e.target_cruise_kmh }
    }
}

/// Ground-truth vehicle state handed to built-in agents. Remote agents see
/// only the text fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrivilegedState {
    pub road: String,
    pub lane: u32,
    pub s: f64,
    pub speed: f64,
    pub heading: f64,
    pub in_junction: bool,
    pub exec: ExecSummary,
    pub weather: crate::world::Weather,
    /// Nearest front obstacle clearance, m.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub front_clearance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionRequest {
    pub tau: f64,
    pub task: TaskKind,
    /// 1 asks for a plan call, 2 carries the planner result and asks for the
    /// decision.
    pub phase: u8,
    pub observation: String,
    pub dialogue: Vec<DialogueEvent>,
    pub actions: Vec<ActionRecord>,
    pub map_text: String,
    #[serde(default)]
    pub plan: Option<String>,
    #[serde(default)]
    pub frames: Option<Vec<String>>,
    /// Answer to the first multiple-choice question, used by the
    /// question-two prompt.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q1_answer: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub privileged: Option<PrivilegedState>,
}

impl DecisionRequest {
    /// SHA-256 of the canonical JSON encoding.
    pub fn digest(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("request serializes");
        hex::encode(Sha256::digest(&bytes))
    }
}

/// Raw agent reply. Free text is parsed by the harness; structured fields
/// take precedence when present.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AgentReply {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plan_call: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub action: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub args: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub utterance: Option<String>,
    #[serde(rename = "move", default, skip_serializing_if = "Option::is_none")]
    pub dialogue_move: Option<String>,
}

impl AgentReply {
    pub fn text(t: impl Into<String>) -> Self {
        Self { text: Some(t.into()), ..Self::default() }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AgentDecision {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plan_call: Option<PlanCall>,
    /// Planner output shown to the agent in phase two.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plan: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub action: Option<PhysicalAction>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub utterance: Option<String>,
    #[serde(rename = "move", default, skip_serializing_if = "Option::is_none")]
    pub dialogue_move: Option<String>,
    /// Timeout, transport failure or unparseable action text. The decision
    /// is then an abstention.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}
