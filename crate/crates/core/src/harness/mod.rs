//! Decision loop, prompt assembly and agent backends.

mod agents;
mod bridge;
mod cycle;
mod maptext;
mod parse;
mod prompt;
mod session;
mod types;

use thiserror::Error;

pub use agents::{agent_from_spec, ConstantAgent, LogReplayAgent, MockLatency, OracleAgent, ScriptedAgent};
pub use bridge::{parse_wire_reply, RemoteAgent, Transport, WireRequest, AGENT_WIRE_VERSION};
pub use cycle::{
    build_decision_request, frame_ids, run_decision_cycle, CycleContext, CycleRecord, RequestOptions, Snapshot,
    FRAME_RATE_HZ,
};
pub use maptext::render_map_text;
pub use parse::{parse_action_text, parse_reply, strip_quotes, ParsedReply};
pub use prompt::{
    action_options, build_prompt, PromptError, PromptStyle, BASELINE_MARKERS, DECISION_PROMPT, DESCRIBE_PROMPT,
    PLANNING_INSTRUCTION, SYSTEM_MESSAGE,
};
pub use session::{
    drive_session, run_closed_loop, HumanInbox, Inbox, PendingDecision, Session, SessionFault, WizardInbox,
};
pub use types::{
    ActionRecord, AgentDecision, AgentReply, DecisionRequest, DialogueEvent, ExecSummary, PrivilegedState, Speaker,
    TaskKind,
};

/// Default dialogue-move labels.
pub const DEFAULT_MOVE_SET: [&str; 6] = ["instruct", "confirm", "clarify", "inform", "acknowledge", "other"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Capabilities {
    TextOnly,
    FrameCapable,
}

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("cannot reach agent at {endpoint}: {reason}")]
    Connect { endpoint: String, reason: String },
    #[error("agent timed out after {0} s")]
    Timeout(f64),
    #[error("malformed agent reply ({reason}): {raw}")]
    Malformed { raw: String, reason: String },
    #[error("agent failed: {0}")]
    Failed(String),
    /// Error message replayed verbatim from a session log.
    #[error("{0}")]
    Recorded(String),
}

/// A dialogue agent. `decide` is called once per protocol phase and must
/// not touch the simulator.
pub trait AgentBackend: Send {
    fn name(&self) -> String;

    fn capabilities(&self) -> Capabilities {
        Capabilities::TextOnly
    }

    fn decide(&mut self, req: &DecisionRequest) -> Result<AgentReply, AgentError>;

    /// Simulated response latency in sim seconds, used to schedule when a
    /// decision takes effect in headless runs.
    fn sim_latency(&self) -> f64 {
        0.0
    }
}

impl<A: AgentBackend + ?Sized> AgentBackend for Box<A> {
    fn name(&self) -> String {
        (**self).name()
    }
    fn capabilities(&self) -> Capabilities {
        (**self).capabilities()
    }
    fn decide(&mut self, req: &DecisionRequest) -> Result<AgentReply, AgentError> {
        (**self).decide(req)
    }
    fn sim_latency(&self) -> f64 {
        (**self).sim_latency()
    }
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("decision time {0} is before the session start")]
    BeforeStart(f64),
    #[error(transparent)]
    World(#[from] crate::world::WorldError),
    #[error(transparent)]
    Verbalize(#[from] crate::verbalizer::VerbalizeError),
    #[error(transparent)]
    Sim(#[from] crate::sim::SimError),
    #[error(transparent)]
    Scenario(#[from] crate::scenario::ScenarioError),
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error("unknown agent spec {0:?} (expected builtin:oracle, builtin:lanefollow or remote:<endpoint>)")]
    AgentSpec(String),
}
