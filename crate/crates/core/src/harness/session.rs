//! Closed-loop session: scenario events, human input, scheduled agent
//! decisions and the 20 Hz tick loop, all recorded into a session log.

use std::collections::VecDeque;
use std::sync::{Arc, Mutex};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::SimConfig;
use crate::planner::PlanOptions;
use crate::scenario::{
    place_obstacle, EventKind, LogEvent, LogHeader, ScenarioError, SessionLog, Storyboard, UtteranceSource, LOG_SCHEMA,
};
use crate::sim::{SimError, Simulator};
use crate::world::{MapGraph, VehicleState, WorldState};

use super::{
    build_decision_request, run_decision_cycle, ActionRecord, AgentBackend, CycleContext, CycleRecord, DecisionRequest,
    DialogueEvent, ExecSummary, HarnessError, RequestOptions, Snapshot, Speaker, TaskKind,
};

/// Thread-safe queue feeding a running session from outside the tick
/// thread. Items enter at the start of the next tick.
#[derive(Debug)]
pub struct Inbox<T>(Arc<Mutex<VecDeque<T>>>);

impl<T> Clone for Inbox<T> {
    fn clone(&self) -> Self {
        Self(Arc::clone(&self.0))
    }
}

impl<T> Default for Inbox<T> {
    fn default() -> Self {
        Self(Arc::new(Mutex::new(VecDeque::new())))
    }
}

impl<T> Inbox<T> {
    pub fn push(&self, item: impl Into<T>) {
        self.0.lock().expect("inbox lock").push_back(item.into());
    }

    fn drain(&self) -> Vec<T> {
        self.0.lock().expect("inbox lock").drain(..).collect()
    }
}

/// Human utterances typed into a live session.
pub type HumanInbox = Inbox<String>;

/// Wizard events injected into a live session.
pub type WizardInbox = Inbox<EventKind>;

impl RequestOptions {
    pub fn from_config(cfg: &SimConfig) -> Self {
        Self { budget: cfg.context, frames: true, window_mode: cfg.window_mode, privileged: true }
    }
}

/// A decision opened at `tau`, carrying everything needed to run the agent
/// off the tick thread.
#[derive(Debug, Clone)]
pub struct PendingDecision {
    pub tau: f64,
    pub tick: u64,
    pub request: DecisionRequest,
    pub world: WorldState,
    pub plan: PlanOptions,
    pub move_set: Vec<String>,
    pub timeout_s: f64,
}

impl PendingDecision {
    pub fn run(&self, agent: &mut dyn AgentBackend, map: &MapGraph, latency_s: f64) -> CycleRecord {
        let ctx = CycleContext {
            map,
            world: &self.world,
            plan: self.plan,
            move_set: &self.move_set,
            timeout_s: self.timeout_s,
            latency_s,
            forced_q1: None,
        };
        run_decision_cycle(agent, &ctx, self.request.clone())
    }
}

/// A session that stopped on a fault, with the log recorded so far (closed
/// with a failure outcome).
#[derive(Debug)]
pub struct SessionFault {
    pub log: SessionLog,
    pub error: HarnessError,
}

impl std::fmt::Display for SessionFault {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "session fault: {}", self.error)
    }
}

impl std::error::Error for SessionFault {}

struct Scheduled {
    apply_tick: u64,
    record: CycleRecord,
}

pub struct Session {
    sim: Simulator,
    story: Storyboard,
    events: Vec<LogEvent>,
    dialogue: Vec<DialogueEvent>,
    actions: Vec<ActionRecord>,
    fired: Vec<bool>,
    goal: String,
    rng: ChaCha8Rng,
    inbox: HumanInbox,
    scripted_human: VecDeque<(f64, String)>,
    wizard: WizardInbox,
    scripted_wizard: VecDeque<(f64, EventKind)>,
    injected: usize,
    rejected: Vec<String>,
    scheduled: Option<Scheduled>,
    outstanding: bool,
    finished: bool,
    opts: RequestOptions,
}

impl Session {
    /// Validates the storyboard against the map, spawns the vehicle and
    /// writes the log header. `seed` overrides the storyboard seed.
    pub fn new(
        map: Arc<MapGraph>,
        story: Storyboard,
        cfg: SimConfig,
        agent: &str,
        seed: Option<u64>,
    ) -> Result<Self, HarnessError> {
        story.validate(&map)?;
        let seed = seed.unwrap_or(story.seed);
        let vehicle = VehicleState::on_lane(&map, story.spawn_location(), cfg.default_cruise_kmh)?;
        let world = WorldState::new(&map, vehicle, story.weather);
        let header = LogHeader {
            v: LOG_SCHEMA.to_string(),
            story: story.clone(),
            map: map.document().clone(),
            config: cfg.clone(),
            agent: agent.to_string(),
            seed,
        };
        let opts = RequestOptions::from_config(&cfg);
        Ok(Self {
            sim: Simulator::new(map, world, cfg),
            fired: vec![false; story.events.len()],
            goal: story.final_goal().to_string(),
            story,
            events: vec![LogEvent::Header(header)],
            dialogue: Vec::new(),
            actions: Vec::new(),
            rng: ChaCha8Rng::seed_from_u64(seed),
            inbox: HumanInbox::default(),
            scripted_human: VecDeque::new(),
            wizard: WizardInbox::default(),
            scripted_wizard: VecDeque::new(),
            injected: 0,
            rejected: Vec::new(),
            scheduled: None,
            outstanding: false,
            finished: false,
            opts,
        })
    }

    pub fn map(&self) -> &Arc<MapGraph> {
        &self.sim.map
    }

    pub fn world(&self) -> &WorldState {
        &self.sim.world
    }

    pub fn config(&self) -> &SimConfig {
        &self.sim.cfg
    }

    pub fn story(&self) -> &Storyboard {
        &self.story
    }

    pub fn time(&self) -> f64 {
        self.sim.world.time
    }

    pub fn tick(&self) -> u64 {
        self.sim.tick
    }

    pub fn goal(&self) -> &str {
        &self.goal
    }

    pub fn dialogue(&self) -> &[DialogueEvent] {
        &self.dialogue
    }

    pub fn actions(&self) -> &[ActionRecord] {
        &self.actions
    }

    pub fn events(&self) -> &[LogEvent] {
        &self.events
    }

    pub fn is_finished(&self) -> bool {
        self.finished
    }

    pub fn inbox(&self) -> HumanInbox {
        self.inbox.clone()
    }

    pub fn wizard(&self) -> WizardInbox {
        self.wizard.clone()
    }

    /// Queues a human utterance to enter at sim time `t` (used by replay).
    pub fn schedule_human(&mut self, t: f64, text: impl Into<String>) {
        self.scripted_human.push_back((t, text.into()));
    }

    /// Queues a wizard event to fire at sim time `t` (used by replay).
    pub fn schedule_wizard(&mut self, t: f64, event: EventKind) {
        self.scripted_wizard.push_back((t, event));
    }

    /// Wizard events rejected since the last call, with the reason. A
    /// rejected event leaves the session untouched and is not logged.
    pub fn take_rejections(&mut self) -> Vec<String> {
        std::mem::take(&mut self.rejected)
    }

    pub fn log(&self) -> SessionLog {
        SessionLog { events: self.events.clone() }
    }

    pub fn into_log(self) -> SessionLog {
        SessionLog { events: self.events }
    }

    fn push_utterance(
        &mut self,
        speaker: Speaker,
        text: String,
        dialogue_move: Option<String>,
        source: UtteranceSource,
    ) {
        let t = self.time();
        self.dialogue.push(DialogueEvent { t, speaker, utterance: text.clone(), dialogue_move: dialogue_move.clone() });
        self.events.push(LogEvent::Utterance { t, speaker, text, dialogue_move, source });
    }

    /// Fires an event. Story events use their storyboard index; injected
    /// events are numbered after the storyboard's events.
    fn fire(&mut self, index: usize, kind: EventKind, source: UtteranceSource) -> Result<(), HarnessError> {
        let obstacle = match &kind {
            EventKind::ObstacleAdd { object, ahead_m, clear_after_s } => {
                Some(place_obstacle(&self.sim.map, &self.sim.world, object, *ahead_m, *clear_after_s, &mut self.rng)?)
            }
            EventKind::GoalChange { goal, .. } if self.sim.map.landmark(goal).is_none() => {
                return Err(ScenarioError::Story(format!("unknown goal landmark {goal:?}")).into());
            }
            _ => None,
        };
        let t = self.time();
        self.events.push(LogEvent::ScenarioEvent { t, index, event: kind.clone() });
        match kind {
            EventKind::Utterance { text } => self.push_utterance(Speaker::Human, text, None, source),
            EventKind::WeatherChange { weather } => self.sim.world.weather = weather,
            EventKind::GoalChange { goal, utterance } => {
                self.goal = goal;
                self.push_utterance(Speaker::Human, utterance, None, source);
            }
            EventKind::ObstacleAdd { .. } => self.sim.world.obstacles.extend(obstacle),
        }
        Ok(())
    }

    fn inject(&mut self, kind: EventKind) {
        let index = self.story.events.len() + self.injected;
        match self.fire(index, kind, UtteranceSource::Wizard) {
            Ok(()) => self.injected += 1,
            Err(e) => self.rejected.push(e.to_string()),
        }
    }

    fn apply_scheduled(&mut self) {
        let Some(s) = self.scheduled.take_if(|s| s.apply_tick <= self.sim.tick) else {
            return;
        };
        let t = self.time();
        let d = s.record.decision;
        if let Some(action) = d.action {
            let result = self.sim.apply(action);
            if result.is_ok() {
                self.actions.push(ActionRecord { t, action });
            }
            self.events.push(LogEvent::ActionApplied {
                t,
                action,
                ok: result.is_ok(),
                error: result.err().map(|e| e.to_string()),
            });
        }
        if let Some(u) = d.utterance {
            self.push_utterance(Speaker::Agent, u, d.dialogue_move, UtteranceSource::Agent);
        }
    }

    /// Start of a tick: fires due scenario events, takes in human input and
    /// applies a decision whose latency has elapsed.
    pub fn begin_tick(&mut self) -> Result<(), HarnessError> {
        if self.finished {
            return Ok(());
        }
        for i in 0..self.story.events.len() {
            if !self.fired[i] && self.story.events[i].trigger.satisfied(&self.sim.world) {
                self.fired[i] = true;
                self.fire(i, self.story.events[i].kind.clone(), UtteranceSource::Story)?;
            }
        }
        let now = self.time();
        while self.scripted_wizard.front().is_some_and(|(t, _)| *t <= now + 1e-9) {
            let (_, event) = self.scripted_wizard.pop_front().expect("front exists");
            self.inject(event);
        }
        for event in self.wizard.drain() {
            self.inject(event);
        }
        while self.scripted_human.front().is_some_and(|(t, _)| *t <= now + 1e-9) {
            let (_, text) = self.scripted_human.pop_front().expect("front exists");
            self.push_utterance(Speaker::Human, text, None, UtteranceSource::Inbox);
        }
        for text in self.inbox.drain() {
            if !text.trim().is_empty() {
                self.push_utterance(Speaker::Human, text, None, UtteranceSource::Inbox);
            }
        }
        self.apply_scheduled();
        Ok(())
    }

    /// A decision opens on every decision-rate boundary with no decision
    /// outstanding.
    pub fn decision_due(&self) -> bool {
        !self.finished
            && !self.outstanding
            && self.scheduled.is_none()
            && self.sim.tick % self.sim.cfg.ticks_per_decision() == 0
    }

    /// Records the world snapshot and builds the phase-one request at the
    /// current time.
    pub fn open_decision(&mut self, task: TaskKind) -> Result<PendingDecision, HarnessError> {
        let tau = self.time();
        let snapshot = Snapshot { world: self.sim.world.clone(), exec: ExecSummary::from(&self.sim.exec) };
        let request =
            build_decision_request(&self.sim.map, &snapshot, &self.dialogue, &self.actions, tau, task, &self.opts)?;
        self.events.push(LogEvent::WorldSnapshot { t: tau, world: snapshot.world.clone(), exec: snapshot.exec });
        self.outstanding = true;
        let cfg = &self.sim.cfg;
        Ok(PendingDecision {
            tau,
            tick: self.sim.tick,
            request,
            world: snapshot.world,
            plan: PlanOptions {
                allow_initial_uturn: cfg.allow_initial_uturn,
                uturn_penalty: cfg.initial_uturn_penalty,
            },
            move_set: cfg.move_set.clone(),
            timeout_s: cfg.agent_timeout_s,
        })
    }

    /// Logs a finished cycle and schedules it `latency_s` of sim time after
    /// the decision opened (capped at the agent timeout).
    pub fn submit(&mut self, pending: &PendingDecision, record: CycleRecord, latency_s: f64) {
        let dt = self.sim.dt();
        let wait = latency_s.min(pending.timeout_s).max(0.0);
        let apply_tick = (pending.tick + (wait / dt - 1e-9).ceil().max(0.0) as u64).max(self.sim.tick);
        let apply_at = ((apply_tick as f64 * dt) * 1e6).round() / 1e6;
        self.events.push(LogEvent::Decision {
            t: self.time(),
            tau: pending.tau,
            latency: latency_s,
            apply_at,
            task: pending.request.task,
            request: record.request.clone(),
            replies: record.replies.clone(),
            decision: record.decision.clone(),
        });
        self.outstanding = false;
        self.scheduled = Some(Scheduled { apply_tick, record });
        self.apply_scheduled();
    }

    fn finish(&mut self, success: bool, reason: Option<String>) {
        self.finished = true;
        self.events.push(LogEvent::Outcome {
            t: self.time(),
            success,
            reason,
            vehicle: self.sim.world.vehicle.clone(),
        });
    }

    /// Closes the log with a failure outcome describing a fault.
    pub fn abort(&mut self, reason: &str) {
        if !self.finished {
            self.finish(false, Some(format!("fault: {reason}")));
        }
    }

    /// Advances the simulation one tick and checks the end conditions.
    /// Returns the outcome once the session is over.
    pub fn end_tick(&mut self) -> Result<Option<bool>, HarnessError> {
        if self.finished {
            return Ok(self.outcome_flag());
        }
        match self.sim.step() {
            Ok(report) => {
                if let Some(kind) = report.collision {
                    self.finish(false, Some(format!("collision with {kind}")));
                    return Ok(Some(false));
                }
            }
            Err(SimError::Motion(e)) => {
                self.finish(false, Some(format!("vehicle fault: {e}")));
                return Ok(Some(false));
            }
            Err(e) => return Err(e.into()),
        }
        let cfg = &self.sim.cfg;
        let v = &self.sim.world.vehicle;
        if let Some(lm) = self.sim.map.landmark(&self.goal) {
            if v.position.dist(lm.anchor) <= cfg.arrival_radius && v.speed < cfg.arrival_speed {
                self.finish(true, None);
                return Ok(Some(true));
            }
        }
        if self.time() >= self.story.timeout_s - 1e-9 {
            let reason = if v.speed < cfg.arrival_speed { "timeout (vehicle stalled)" } else { "timeout" };
            self.finish(false, Some(reason.to_string()));
            return Ok(Some(false));
        }
        Ok(None)
    }

    fn outcome_flag(&self) -> Option<bool> {
        match self.events.last() {
            Some(LogEvent::Outcome { success, .. }) => Some(*success),
            _ => None,
        }
    }
}

/// Runs a session to completion with decisions every `1 / decision_hz` of
/// sim time, each taking effect after the agent's simulated latency.
pub fn run_closed_loop(mut session: Session, agent: &mut dyn AgentBackend) -> Result<SessionLog, SessionFault> {
    let latency = agent.sim_latency();
    drive_session(&mut session, agent, |_| latency)?;
    Ok(session.into_log())
}

/// Tick loop shared by live runs and replays; `latency` gives the simulated
/// latency of the decision opened at a given time. On a fault the log is
/// closed with a failure outcome.
pub fn drive_session(
    session: &mut Session,
    agent: &mut dyn AgentBackend,
    latency: impl Fn(f64) -> f64,
) -> Result<(), SessionFault> {
    let result = (|| -> Result<(), HarnessError> {
        loop {
            session.begin_tick()?;
            if session.decision_due() {
                let pending = session.open_decision(TaskKind::ClosedLoop)?;
                let l = latency(pending.tau);
                let record = pending.run(agent, &session.sim.map.clone(), l);
                session.submit(&pending, record, l);
            }
            if session.end_tick()?.is_some() {
                return Ok(());
            }
        }
    })();
    result.map_err(|error| {
        session.abort(&error.to_string());
        SessionFault { log: session.log(), error }
    })
}
