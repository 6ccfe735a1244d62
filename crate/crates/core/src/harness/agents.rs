//! Built-in agents: the privileged oracle, degenerate baselines, scripted
//! and log-replay agents for tests and teacher forcing.

use std::collections::{HashMap, VecDeque};
use std::sync::Arc;

use crate::config::SimConfig;
use crate::motion::{Direction, PhysicalAction};
use crate::planner::TurnDirection;
use crate::scenario::{LogEvent, SessionLog};
use crate::world::{normalize_name, MapGraph};

use super::{
    AgentBackend, AgentError, AgentReply, DecisionRequest, HarnessError, PrivilegedState, RemoteAgent, Speaker,
};

/// Landmark named in `text`, matched on whole words.
pub(crate) fn mentioned_landmark<'a>(map: &'a MapGraph, text: &str) -> Option<&'a str> {
    let words: Vec<String> = text
        .split(|c: char| !c.is_alphanumeric() && c != '\'')
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
        .collect();
    let mut best: Option<(usize, &str)> = None;
    for lm in map.landmarks() {
        let key: Vec<String> = normalize_name(&lm.name).split(' ').map(str::to_string).collect();
        if let Some(pos) = words.windows(key.len()).position(|w| w == key.as_slice()) {
            if best.is_none_or(|(p, _)| pos < p) {
                best = Some((pos, lm.name.as_str()));
            }
        }
    }
    best.map(|(_, n)| n)
}

/// Turn-by-turn command in a human utterance.
fn short_command(text: &str) -> Option<PhysicalAction> {
    let t = text.to_lowercase();
    if t.contains("turn left") || t.contains("left turn") {
        Some(PhysicalAction::JTurn(Direction::Left))
    } else if t.contains("turn right") || t.contains("right turn") {
        Some(PhysicalAction::JTurn(Direction::Right))
    } else if t.contains("u-turn") || t.contains("turn around") {
        Some(PhysicalAction::UTurn)
    } else if t.contains("stop") || t.contains("pull over") {
        Some(PhysicalAction::Stop)
    } else if t.contains("go ahead") || t.contains("keep going") || t.contains("start") {
        Some(PhysicalAction::Start)
    } else {
        None
    }
}

fn parse_plan(plan: &str) -> Option<Vec<TurnDirection>> {
    let inner = plan.trim().strip_prefix('[')?.strip_suffix(']')?;
    inner
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| match s {
            "left" => Some(TurnDirection::Left),
            "right" => Some(TurnDirection::Right),
            "straight" => Some(TurnDirection::Straight),
            "uturn" => Some(TurnDirection::Uturn),
            _ => None,
        })
        .collect()
}

/// Privileged agent that reads the ground-truth state in the request and
/// follows the route planner. It ignores obstacles, so it depends on the
/// executor's automatic safety stop.
pub struct OracleAgent {
    map: Arc<MapGraph>,
    cfg: SimConfig,
}

enum Intent {
    None,
    Goal(String),
    Command(PhysicalAction),
}

impl OracleAgent {
    pub fn new(map: Arc<MapGraph>, cfg: SimConfig) -> Self {
        Self { map, cfg }
    }

    /// Latest human utterance that either names a landmark or gives a
    /// short-horizon command, together with its time.
    fn intent(&self, req: &DecisionRequest) -> (Intent, f64) {
        for d in req.dialogue.iter().rev().filter(|d| d.speaker == Speaker::Human) {
            if let Some(lm) = mentioned_landmark(&self.map, &d.utterance) {
                return (Intent::Goal(lm.to_string()), d.t);
            }
            if let Some(a) = short_command(&d.utterance) {
                return (Intent::Command(a), d.t);
            }
        }
        (Intent::None, 0.0)
    }

    fn stopping_distance(&self, p: &PrivilegedState) -> f64 {
        let a = if p.weather.is_slippery() {
            self.cfg.vehicle.a_max * self.cfg.control.weather_accel_factor
        } else {
            self.cfg.vehicle.a_max
        };
        p.speed * p.speed / (2.0 * a) + 0.5 * p.speed + 3.0
    }

    fn goal_action(&self, goal: &str, plan: Option<&str>, p: &PrivilegedState) -> PhysicalAction {
        let stopped = p.exec.maneuver == "stopped";
        let resume = if stopped { PhysicalAction::Start } else { PhysicalAction::LaneFollow };
        let Some(dirs) = plan.and_then(parse_plan) else {
            return resume;
        };
        match dirs.first() {
            None => {
                let lm = self.map.landmark(goal).expect("planned goal exists");
                let remaining = lm.s - p.s;
                if remaining <= self.stopping_distance(p) {
                    PhysicalAction::Stop
                } else {
                    resume
                }
            }
            Some(TurnDirection::Left) if p.exec.pending_turn != Some(Direction::Left) => {
                PhysicalAction::JTurn(Direction::Left)
            }
            Some(TurnDirection::Right) if p.exec.pending_turn != Some(Direction::Right) => {
                PhysicalAction::JTurn(Direction::Right)
            }
            Some(TurnDirection::Uturn) if !p.in_junction && p.exec.maneuver == "following" => PhysicalAction::UTurn,
            _ => resume,
        }
    }

    fn reply_line(&self, req: &DecisionRequest, intent: &Intent) -> Option<String> {
        let last = req.dialogue.last()?;
        if last.speaker != Speaker::Human {
            return None;
        }
        Some(match intent {
            Intent::Goal(g) => format!("Ok, I will go to {g}."),
            Intent::Command(PhysicalAction::JTurn(d)) => {
                format!("Sure, I will turn {} at the next junction.", d.label())
            }
            Intent::Command(PhysicalAction::UTurn) => "Sure, I will turn around.".to_string(),
            Intent::Command(PhysicalAction::Stop) => "Ok, stopping here.".to_string(),
            Intent::Command(_) => "Ok, let's go.".to_string(),
            Intent::None => "Ok.".to_string(),
        })
    }
}

impl AgentBackend for OracleAgent {
    fn name(&self) -> String {
        "builtin:oracle".into()
    }

    fn decide(&mut self, req: &DecisionRequest) -> Result<AgentReply, AgentError> {
        let p = req
            .privileged
            .as_ref()
            .ok_or_else(|| AgentError::Failed("the oracle needs privileged state in the request".into()))?;
        let (intent, since) = self.intent(req);
        if req.phase == 1 {
            let target = match &intent {
                Intent::Goal(g) => g.as_str(),
                _ => "None",
            };
            return Ok(AgentReply::text(format!("Description: {}\nPlanning: plan({target})", req.observation)));
        }
        let action = match &intent {
            Intent::Goal(g) => self.goal_action(g, req.plan.as_deref(), p),
            Intent::Command(cmd) => {
                let done = req.actions.iter().any(|a| a.t >= since && a.action == *cmd);
                if done && *cmd != PhysicalAction::Stop {
                    PhysicalAction::LaneFollow
                } else {
                    *cmd
                }
            }
            Intent::None => PhysicalAction::LaneFollow,
        };
        let mut text = format!("Action: {action}");
        if let Some(line) = self.reply_line(req, &intent) {
            text.push_str(&format!("\nDialogue: \"{line}\"\nMove: acknowledge"));
        }
        Ok(AgentReply::text(text))
    }
}

/// Answers every phase with the same action and no plan call.
pub struct ConstantAgent {
    action: PhysicalAction,
}

impl ConstantAgent {
    pub fn new(action: PhysicalAction) -> Self {
        Self { action }
    }

    pub fn lane_follow() -> Self {
        Self::new(PhysicalAction::LaneFollow)
    }
}

impl AgentBackend for ConstantAgent {
    fn name(&self) -> String {
        format!("constant:{}", self.action)
    }

    fn decide(&mut self, req: &DecisionRequest) -> Result<AgentReply, AgentError> {
        Ok(AgentReply::text(if req.phase == 1 { "plan(None)".to_string() } else { format!("{}", self.action) }))
    }
}

/// Plays back a fixed list of replies in order, one per phase. Once the
/// script runs out every reply is `LaneFollow`.
pub struct ScriptedAgent {
    replies: VecDeque<AgentReply>,
    latency: f64,
}

impl ScriptedAgent {
    pub fn new(replies: impl IntoIterator<Item = AgentReply>) -> Self {
        Self { replies: replies.into_iter().collect(), latency: 0.0 }
    }

    pub fn texts<S: Into<String>>(texts: impl IntoIterator<Item = S>) -> Self {
        Self::new(texts.into_iter().map(AgentReply::text))
    }

    pub fn with_latency(mut self, seconds: f64) -> Self {
        self.latency = seconds;
        self
    }
}

impl AgentBackend for ScriptedAgent {
    fn name(&self) -> String {
        "scripted".into()
    }

    fn decide(&mut self, _req: &DecisionRequest) -> Result<AgentReply, AgentError> {
        Ok(self.replies.pop_front().unwrap_or_else(|| AgentReply::text("LaneFollow")))
    }

    fn sim_latency(&self) -> f64 {
        self.latency
    }
}

fn tau_key(tau: f64) -> i64 {
    (tau * 1e6).round() as i64
}

/// Returns the replies recorded in a session log for the same decision time
/// and phase. Used to re-record sessions and as the echo-gold agent in
/// teacher forcing.
pub struct LogReplayAgent {
    name: String,
    replies: HashMap<(i64, u8), Result<AgentReply, String>>,
}

impl LogReplayAgent {
    pub fn new(name: impl Into<String>) -> Self {
        Self { name: name.into(), replies: HashMap::new() }
    }

    pub fn insert(&mut self, tau: f64, phase: u8, reply: AgentReply) {
        self.replies.insert((tau_key(tau), phase), Ok(reply));
    }

    /// Records a failed phase; replaying it yields the same error message.
    pub fn insert_error(&mut self, tau: f64, phase: u8, message: String) {
        self.replies.entry((tau_key(tau), phase)).or_insert(Err(message));
    }

    /// Loads every recorded reply (and failed phase) from a session log.
    pub fn from_log(log: &SessionLog) -> Self {
        let name = log.header().map(|h| h.agent.clone()).unwrap_or_else(|_| "replay".into());
        let mut agent = Self::new(name);
        for e in &log.events {
            if let LogEvent::Decision { tau, replies, decision, .. } = e {
                for (i, r) in replies.iter().enumerate() {
                    agent.insert(*tau, i as u8 + 1, r.clone());
                }
                if let Some(err) = &decision.error {
                    agent.insert_error(*tau, replies.len() as u8 + 1, err.clone());
                }
            }
        }
        agent
    }
}

impl AgentBackend for LogReplayAgent {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn decide(&mut self, req: &DecisionRequest) -> Result<AgentReply, AgentError> {
        match self.replies.get(&(tau_key(req.tau), req.phase)) {
            Some(Ok(r)) => Ok(r.clone()),
            Some(Err(m)) => Err(AgentError::Recorded(m.clone())),
            None => Err(AgentError::Failed(format!("no recorded reply at t = {} phase {}", req.tau, req.phase))),
        }
    }
}

/// Wraps an agent and reports a fixed simulated latency.
pub struct MockLatency<A> {
    pub inner: A,
    pub latency: f64,
}

impl<A: AgentBackend> MockLatency<A> {
    pub fn new(inner: A, latency: f64) -> Self {
        Self { inner, latency }
    }
}

impl<A: AgentBackend> AgentBackend for MockLatency<A> {
    fn name(&self) -> String {
        self.inner.name()
    }

    fn capabilities(&self) -> super::Capabilities {
        self.inner.capabilities()
    }

    fn decide(&mut self, req: &DecisionRequest) -> Result<AgentReply, AgentError> {
        self.inner.decide(req)
    }

    fn sim_latency(&self) -> f64 {
        self.latency
    }
}

/// Builds an agent from `builtin:oracle`, `builtin:lanefollow` or
/// `remote:<endpoint>`.
pub fn agent_from_spec(spec: &str, map: Arc<MapGraph>, cfg: &SimConfig) -> Result<Box<dyn AgentBackend>, HarnessError> {
    match spec.trim() {
        "builtin:oracle" => Ok(Box::new(OracleAgent::new(map, cfg.clone()))),
        "builtin:lanefollow" => Ok(Box::new(ConstantAgent::lane_follow())),
        s => match s.strip_prefix("remote:") {
            Some(endpoint) if !endpoint.is_empty() => Ok(Box::new(RemoteAgent::connect(endpoint, cfg)?)),
            _ => Err(HarnessError::AgentSpec(s.to_string())),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assets::load_bundled_map;

    #[test]
    fn landmark_mentions() {
        let map = load_bundled_map("townA").unwrap().unwrap();
        assert_eq!(mentioned_landmark(&map, "Please go to Shell."), Some("Shell"));
        assert_eq!(mentioned_landmark(&map, "actually, take me to KFC instead"), Some("KFC"));
        assert_eq!(mentioned_landmark(&map, "shellfish"), None);
        assert_eq!(mentioned_landmark(&map, "turn right here"), None);
    }

    #[test]
    fn plan_text_round_trip() {
        assert_eq!(parse_plan("[left, straight]"), Some(vec![TurnDirection::Left, TurnDirection::Straight]));
        assert_eq!(parse_plan("[]"), Some(vec![]));
        assert_eq!(parse_plan("planner error: unknown landmark"), None);
    }
}
