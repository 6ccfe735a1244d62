//! Request assembly and the two-phase decision cycle.

use serde::{Deserialize, Serialize};

use crate::config::ContextBudget;
use crate::features::{sample_window, FrameStream, WindowMode};
use crate::planner::{plan_route_with, render_plan, PlanOptions};
use crate::verbalizer::{observe, verbalize};
use crate::world::{front_object, MapGraph, WorldState};

use super::parse::parse_reply;
use super::{
    render_map_text, ActionRecord, AgentBackend, AgentDecision, AgentReply, Capabilities, DecisionRequest,
    DialogueEvent, ExecSummary, HarnessError, PrivilegedState, TaskKind,
};

/// Frame rate of the synthetic camera stream referenced by frame ids.
pub const FRAME_RATE_HZ: f64 = 10.0;

/// World plus executor fields at one instant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub world: WorldState,
    pub exec: ExecSummary,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RequestOptions {
    pub budget: ContextBudget,
    pub frames: bool,
    pub window_mode: WindowMode,
    pub privileged: bool,
}

impl Default for RequestOptions {
    fn default() -> Self {
        Self { budget: ContextBudget::default(), frames: false, window_mode: WindowMode::default(), privileged: true }
    }
}

fn tail<T: Clone>(items: Vec<T>, cap: Option<usize>) -> Vec<T> {
    match cap {
        Some(n) if items.len() > n => items[items.len() - n..].to_vec(),
        _ => items,
    }
}

/// Frame ids of the synthetic 10 Hz stream selected for time `tau`.
pub fn frame_ids(tau: f64, mode: WindowMode) -> Vec<String> {
    let count = (tau * FRAME_RATE_HZ + 1e-9).floor() as usize + 1;
    let stream = FrameStream::uniform(count, FRAME_RATE_HZ, "frame");
    sample_window(&stream, tau, mode).unwrap_or_default()
}

/// Phase-one request at `tau`. Histories keep only events strictly before
/// `tau`, truncated to the most recent entries allowed by the budget.
pub fn build_decision_request(
    map: &MapGraph,
    snapshot: &Snapshot,
    dialogue: &[DialogueEvent],
    actions: &[ActionRecord],
    tau: f64,
    task: TaskKind,
    opts: &RequestOptions,
) -> Result<DecisionRequest, HarnessError> {
    if !(tau >= 0.0) {
        return Err(HarnessError::BeforeStart(tau));
    }
    let world = &snapshot.world;
    let obs = observe(map, world)?;
    let observation = verbalize(&obs)?;
    let dialogue = tail(dialogue.iter().filter(|d| d.t < tau).cloned().collect(), opts.budget.dialogue);
    let actions = tail(actions.iter().filter(|a| a.t < tau).cloned().collect(), opts.budget.actions);
    let v = &world.vehicle;
    let privileged = opts.privileged.then(|| PrivilegedState {
        road: v.lane.road.clone(),
        lane: v.lane.lane,
        s: v.lane.s,
        speed: v.speed,
        heading: v.heading,
        in_junction: v.in_junction,
        exec: snapshot.exec.clone(),
        weather: world.weather,
        front_clearance: front_object(map, world).map(|(_, d)| d),
    });
    Ok(DecisionRequest {
        tau,
        task,
        phase: 1,
        observation,
        dialogue,
        actions,
        map_text: render_map_text(map, v),
        plan: None,
        frames: opts.frames.then(|| frame_ids(tau, opts.window_mode)),
        q1_answer: None,
        privileged,
    })
}

/// Everything one decision cycle produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleRecord {
    /// Digest of the phase-one request.
    pub request: String,
    pub replies: Vec<AgentReply>,
    pub decision: AgentDecision,
}

/// Inputs of one cycle besides the agent.
pub struct CycleContext<'a> {
    pub map: &'a MapGraph,
    pub world: &'a WorldState,
    pub plan: PlanOptions,
    pub move_set: &'a [String],
    pub timeout_s: f64,
    /// Simulated agent latency; beyond `timeout_s` both phases time out.
    pub latency_s: f64,
    /// Teacher-forced answer to question one, overriding the agent's.
    pub forced_q1: Option<String>,
}

fn call(agent: &mut dyn AgentBackend, req: &DecisionRequest, ctx: &CycleContext<'_>) -> Result<AgentReply, String> {
    if ctx.latency_s > ctx.timeout_s {
        return Err(format!("agent timed out after {} s", ctx.timeout_s));
    }
    agent.decide(req).map_err(|e| e.to_string())
}

/// Two-phase protocol: phase one may yield a plan call, which is resolved by
/// the route planner; phase two carries the plan and yields the decision.
pub fn run_decision_cycle(
    agent: &mut dyn AgentBackend,
    ctx: &CycleContext<'_>,
    mut req: DecisionRequest,
) -> CycleRecord {
    let digest = req.digest();
    if agent.capabilities() == Capabilities::TextOnly {
        req.frames = None;
    }
    let mut replies = Vec::new();
    let mut decision = AgentDecision::default();

    let first = match call(agent, &req, ctx) {
        Ok(r) => r,
        Err(e) => {
            decision.error = Some(e);
            return CycleRecord { request: digest, replies, decision };
        }
    };
    let p1 = parse_reply(&first, &req, ctx.move_set);
    replies.push(first);
    decision.description = p1.description.clone();
    decision.plan_call = p1.plan_call.clone();

    if let Some(target) = p1.plan_call.as_ref().and_then(|c| c.target.clone()) {
        let v = &ctx.world.vehicle;
        let plan = match plan_route_with(ctx.map, &v.lane, v.heading, &target, ctx.plan) {
            Ok(route) => render_plan(&route.directions),
            Err(e) => format!("planner error: {e}"),
        };
        decision.plan = Some(plan.clone());
        req.plan = Some(plan);
    }
    req.phase = 2;
    req.q1_answer = ctx.forced_q1.clone().or_else(|| match req.task {
        TaskKind::RfN => p1.dialogue_move.clone(),
        _ => p1.action.as_ref().and_then(|a| a.as_ref().ok()).map(|a| a.kind().name().to_string()),
    });

    let second = match call(agent, &req, ctx) {
        Ok(r) => r,
        Err(e) => {
            decision.error = Some(e);
            return CycleRecord { request: digest, replies, decision };
        }
    };
    let p2 = parse_reply(&second, &req, ctx.move_set);
    replies.push(second);
    match p2.action {
        Some(Ok(a)) => decision.action = Some(a),
        Some(Err(e)) => decision.error = Some(format!("unparseable action: {e}")),
        None if req.task != TaskKind::RfN => decision.error = Some("no action in reply".into()),
        None => {}
    }
    decision.utterance = p2.utterance;
    decision.dialogue_move = p2.dialogue_move;
    if p2.description.is_some() {
        decision.description = p2.description;
    }
    CycleRecord { request: digest, replies, decision }
}
