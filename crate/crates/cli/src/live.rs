//! Live-session server (`sdnloop-live/1`): HTTP endpoints for snapshots,
//! human utterances and wizard events, plus a server-sent event stream of
//! everything the session logs.
//!
//! The simulation loop and the agent each run on their own thread and talk
//! through channels; the HTTP side only touches the shared [`Hub`] and the
//! session's input queues.
//!
//! | method | path              | body / query                          |
//! |--------|-------------------|---------------------------------------|
//! | GET    | `/v1/session`     |                                       |
//! | GET    | `/v1/map`         |                                       |
//! | GET    | `/v1/state`       |                                       |
//! | GET    | `/v1/events`      | `?since=<seq>` or `Last-Event-ID`     |
//! | POST   | `/v1/utterances`  | `{"text": ...}`                       |
//! | POST   | `/v1/wizard`      | a storyboard event, e.g. `{"type": "weather_change", "weather": "rain"}` |
//!
//! POSTs honour an `Idempotency-Key` header: a repeated key is acknowledged
//! again with `"duplicate": true` and not enqueued a second time.

use std::collections::{HashMap, VecDeque};
use std::convert::Infallible;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc;
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

use anyhow::{Context, Result};
use axum::extract::{Query, State};
use axum::http::{HeaderMap, StatusCode};
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use futures::Stream;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tokio::sync::broadcast;

use sdnloop::config::SimConfig;
use sdnloop::harness::{
    agent_from_spec, AgentBackend, CycleRecord, HarnessError, HumanInbox, PendingDecision, Session, TaskKind,
    WizardInbox,
};
use sdnloop::scenario::{EventKind, LogEvent, Storyboard};
use sdnloop::world::{MapGraph, WorldState};

pub const LIVE_SCHEMA: &str = "sdnloop-live/1";

const BROADCAST_CAPACITY: usize = 1024;

/// One entry of the ordered event stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiveEvent {
    pub v: String,
    /// Position in the stream, starting at 1.
    pub seq: u64,
    #[serde(flatten)]
    pub body: LiveBody,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LiveBody {
    /// An event appended to the session log.
    Log { event: LogEvent },
    /// A wizard event that could not be applied, e.g. an obstacle with no
    /// room ahead.
    WizardRejected { reason: String },
    /// The session log was written to disk.
    LogWritten { path: String },
    /// The session log could not be written.
    LogFailed { path: String, reason: String },
}

impl LiveBody {
    fn name(&self) -> &'static str {
        match self {
            LiveBody::Log { .. } => "log",
            LiveBody::WizardRejected { .. } => "wizard_rejected",
            LiveBody::LogWritten { .. } => "log_written",
            LiveBody::LogFailed { .. } => "log_failed",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeView {
    pub success: bool,
    pub reason: Option<String>,
}

/// Latest session state, refreshed every tick.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateSnapshot {
    pub v: String,
    /// Last stream entry reflected in this snapshot.
    pub seq: u64,
    pub tick: u64,
    pub t: f64,
    pub goal: String,
    pub world: WorldState,
    pub finished: bool,
    pub outcome: Option<OutcomeView>,
}

/// Acknowledgement of a POST.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ack {
    pub v: String,
    pub accepted: bool,
    pub duplicate: bool,
    pub key: Option<String>,
}

struct HubState {
    history: Vec<LiveEvent>,
    snapshot: StateSnapshot,
    keys: HashMap<String, Ack>,
}

/// State shared between the simulation thread and the HTTP handlers.
pub struct Hub {
    state: Mutex<HubState>,
    tx: broadcast::Sender<LiveEvent>,
    map: Arc<MapGraph>,
    story: Storyboard,
    agent: String,
    config: SimConfig,
    realtime: bool,
    human: HumanInbox,
    wizard: WizardInbox,
}

impl Hub {
    fn publish(&self, state: &mut HubState, body: LiveBody) {
        let event = LiveEvent { v: LIVE_SCHEMA.into(), seq: state.history.len() as u64 + 1, body };
        state.history.push(event.clone());
        state.snapshot.seq = event.seq;
        let _ = self.tx.send(event);
    }

    /// Publishes log events appended since the last sync and refreshes the
    /// snapshot.
    fn sync(&self, session: &mut Session, logged: &mut usize) {
        let rejections = session.take_rejections();
        let mut state = self.state.lock().expect("hub lock");
        for event in &session.events()[*logged..] {
            self.publish(&mut state, LiveBody::Log { event: event.clone() });
        }
        *logged = session.events().len();
        for reason in rejections {
            self.publish(&mut state, LiveBody::WizardRejected { reason });
        }
        let outcome = match session.events().last() {
            Some(LogEvent::Outcome { success, reason, .. }) => {
                Some(OutcomeView { success: *success, reason: reason.clone() })
            }
            _ => None,
        };
        let seq = state.snapshot.seq;
        state.snapshot = StateSnapshot {
            v: LIVE_SCHEMA.into(),
            seq,
            tick: session.tick(),
            t: session.time(),
            goal: session.goal().to_string(),
            world: session.world().clone(),
            finished: session.is_finished(),
            outcome,
        };
    }

    fn since(&self, seq: u64) -> Vec<LiveEvent> {
        let state = self.state.lock().expect("hub lock");
        state.history.iter().skip(seq as usize).cloned().collect()
    }

    /// Backlog after `seq` plus a receiver for everything newer, taken
    /// under one lock so nothing falls between them.
    fn subscribe(&self, seq: u64) -> (Vec<LiveEvent>, broadcast::Receiver<LiveEvent>) {
        let state = self.state.lock().expect("hub lock");
        let backlog = state.history.iter().skip(seq as usize).cloned().collect();
        (backlog, self.tx.subscribe())
    }

    /// Runs `enqueue` once per idempotency key.
    fn accept(&self, headers: &HeaderMap, scope: &str, enqueue: impl FnOnce()) -> Result<Ack, ApiError> {
        let key = headers.get("idempotency-key").and_then(|v| v.to_str().ok()).map(str::to_string);
        let mut state = self.state.lock().expect("hub lock");
        if state.snapshot.finished {
            return Err(ApiError(StatusCode::CONFLICT, "session has finished".into()));
        }
        if let Some(k) = &key {
            if let Some(prev) = state.keys.get(&format!("{scope}:{k}")) {
                return Ok(Ack { duplicate: true, ..prev.clone() });
            }
        }
        enqueue();
        let ack = Ack { v: LIVE_SCHEMA.into(), accepted: true, duplicate: false, key: key.clone() };
        if let Some(k) = key {
            state.keys.insert(format!("{scope}:{k}"), ack.clone());
        }
        Ok(ack)
    }
}

struct ApiError(StatusCode, String);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(json!({ "v": LIVE_SCHEMA, "error": self.1 }))).into_response()
    }
}

fn bad_request(message: impl Into<String>) -> ApiError {
    ApiError(StatusCode::BAD_REQUEST, message.into())
}

async fn session_info(State(hub): State<Arc<Hub>>) -> Json<Value> {
    Json(json!({
        "v": LIVE_SCHEMA,
        "story": hub.story.id,
        "map": hub.map.id(),
        "agent": hub.agent,
        "tick_hz": hub.config.tick_hz,
        "decision_hz": hub.config.decision_hz,
        "realtime": hub.realtime,
    }))
}

async fn map_document(State(hub): State<Arc<Hub>>) -> Json<Value> {
    Json(json!({ "v": LIVE_SCHEMA, "map": hub.map.document() }))
}

async fn state(State(hub): State<Arc<Hub>>) -> Json<StateSnapshot> {
    Json(hub.state.lock().expect("hub lock").snapshot.clone())
}

#[derive(Deserialize)]
struct UtteranceBody {
    text: String,
}

async fn post_utterance(
    State(hub): State<Arc<Hub>>,
    headers: HeaderMap,
    body: String,
) -> Result<(StatusCode, Json<Ack>), ApiError> {
    let body: UtteranceBody = serde_json::from_str(&body).map_err(|e| bad_request(e.to_string()))?;
    let text = body.text.trim().to_string();
    if text.is_empty() {
        return Err(bad_request("utterance text is empty"));
    }
    let ack = hub.accept(&headers, "utterance", || hub.human.push(text))?;
    Ok((StatusCode::ACCEPTED, Json(ack)))
}

async fn post_wizard(
    State(hub): State<Arc<Hub>>,
    headers: HeaderMap,
    body: String,
) -> Result<(StatusCode, Json<Ack>), ApiError> {
    let event: EventKind = serde_json::from_str(&body).map_err(|e| bad_request(e.to_string()))?;
    match &event {
        EventKind::GoalChange { goal, .. } if hub.map.landmark(goal).is_none() => {
            return Err(bad_request(format!("unknown goal landmark {goal:?}")));
        }
        EventKind::ObstacleAdd { ahead_m, .. } if !(*ahead_m >= 0.0) => {
            return Err(bad_request("ahead_m must be non-negative"));
        }
        _ => {}
    }
    let ack = hub.accept(&headers, "wizard", || hub.wizard.push(event))?;
    Ok((StatusCode::ACCEPTED, Json(ack)))
}

#[derive(Deserialize)]
struct EventsQuery {
    since: Option<u64>,
}

fn to_sse(e: &LiveEvent) -> Event {
    Event::default()
        .id(e.seq.to_string())
        .event(e.body.name())
        .data(serde_json::to_string(e).expect("live events serialize"))
}

/// Replays the stream after `since` (or the `Last-Event-ID` header), then
/// follows it live. A lagging subscriber catches up from the history.
async fn events(
    State(hub): State<Arc<Hub>>,
    headers: HeaderMap,
    Query(q): Query<EventsQuery>,
) -> Sse<impl Stream<Item = Result<Event, Infallible>>> {
    let last_id = headers.get("last-event-id").and_then(|v| v.to_str().ok()).and_then(|v| v.trim().parse().ok());
    let since = q.since.or(last_id).unwrap_or(0);
    let (backlog, rx) = hub.subscribe(since);
    let init = (VecDeque::from(backlog), rx, since, hub);
    let stream = futures::stream::unfold(init, |(mut buf, mut rx, mut last, hub)| async move {
        loop {
            if let Some(e) = buf.pop_front() {
                if e.seq <= last {
                    continue;
                }
                last = e.seq;
                return Some((Ok(to_sse(&e)), (buf, rx, last, hub)));
            }
            match rx.recv().await {
                Ok(e) => buf.push_back(e),
                Err(broadcast::error::RecvError::Lagged(_)) => buf.extend(hub.since(last)),
                Err(broadcast::error::RecvError::Closed) => return None,
            }
        }
    });
    Sse::new(stream).keep_alive(KeepAlive::default())
}

pub fn router(hub: Arc<Hub>) -> Router {
    Router::new()
        .route("/v1/session", get(session_info))
        .route("/v1/map", get(map_document))
        .route("/v1/state", get(state))
        .route("/v1/events", get(events))
        .route("/v1/utterances", post(post_utterance))
        .route("/v1/wizard", post(post_wizard))
        .with_state(hub)
}

#[derive(Debug, Clone)]
pub struct LiveOptions {
    pub map: Arc<MapGraph>,
    pub story: Storyboard,
    pub config: SimConfig,
    pub agent: String,
    pub seed: Option<u64>,
    /// Fast-forward instead of pacing ticks to the wall clock.
    pub headless: bool,
    /// Where to write the session log once it ends.
    pub out: Option<PathBuf>,
}

/// Agent thread reply: the finished cycle, its wall-clock duration and the
/// agent's simulated latency.
type AgentReply = (CycleRecord, f64, f64);

fn agent_thread(
    mut agent: Box<dyn AgentBackend>,
    map: Arc<MapGraph>,
    rx: mpsc::Receiver<PendingDecision>,
    tx: mpsc::Sender<AgentReply>,
) -> JoinHandle<()> {
    std::thread::spawn(move || {
        for pending in rx {
            let t0 = Instant::now();
            let simulated = agent.sim_latency();
            let record = pending.run(agent.as_mut(), &map, simulated);
            if tx.send((record, t0.elapsed().as_secs_f64(), simulated)).is_err() {
                return;
            }
        }
    })
}

struct SimLoop {
    session: Session,
    hub: Arc<Hub>,
    headless: bool,
    out: Option<PathBuf>,
    stop: Arc<AtomicBool>,
    to_agent: mpsc::Sender<PendingDecision>,
    from_agent: mpsc::Receiver<AgentReply>,
}

impl SimLoop {
    fn run(mut self) {
        let mut logged = 0;
        self.hub.sync(&mut self.session, &mut logged);
        if let Err(e) = self.ticks(&mut logged) {
            self.session.abort(&e.to_string());
        }
        self.hub.sync(&mut self.session, &mut logged);
        if let Some(path) = &self.out {
            let mut state = self.hub.state.lock().expect("hub lock");
            let shown = path.display().to_string();
            let body = match self.session.log().write(path) {
                Ok(()) => LiveBody::LogWritten { path: shown },
                Err(e) => LiveBody::LogFailed { path: shown, reason: e.to_string() },
            };
            self.hub.publish(&mut state, body);
        }
    }

    fn ticks(&mut self, logged: &mut usize) -> Result<(), HarnessError> {
        let dt = self.session.config().dt();
        let start = Instant::now();
        let mut pending: Option<PendingDecision> = None;
        while !self.stop.load(Ordering::Relaxed) {
            self.session.begin_tick()?;
            if pending.is_none() && self.session.decision_due() {
                let p = self.session.open_decision(TaskKind::ClosedLoop)?;
                if self.to_agent.send(p.clone()).is_err() {
                    return Ok(());
                }
                pending = Some(p);
            }
            if let Some(p) = &pending {
                let reply = if self.headless { self.from_agent.recv().ok() } else { self.from_agent.try_recv().ok() };
                if let Some((record, wall, simulated)) = reply {
                    let latency = if self.headless { simulated } else { wall.max(simulated) };
                    self.session.submit(p, record, latency);
                    pending = None;
                }
            }
            let done = self.session.end_tick()?;
            self.hub.sync(&mut self.session, logged);
            if done.is_some() {
                return Ok(());
            }
            if !self.headless {
                let due = start + Duration::from_secs_f64(self.session.tick() as f64 * dt);
                if let Some(wait) = due.checked_duration_since(Instant::now()) {
                    std::thread::sleep(wait);
                }
            }
        }
        Ok(())
    }
}

/// A running live session. Dropping it without [`LiveServer::shutdown`]
/// leaves the threads running until the process exits.
pub struct LiveServer {
    addr: SocketAddr,
    hub: Arc<Hub>,
    stop: Arc<AtomicBool>,
    sim: Option<JoinHandle<()>>,
    runtime: Option<tokio::runtime::Runtime>,
}

impl LiveServer {
    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn snapshot(&self) -> StateSnapshot {
        self.hub.state.lock().expect("hub lock").snapshot.clone()
    }

    /// Blocks until Ctrl-C, then shuts down.
    pub fn wait(self) -> Result<()> {
        let rt = self.runtime.as_ref().expect("runtime present");
        rt.block_on(tokio::signal::ctrl_c()).context("waiting for Ctrl-C")?;
        self.shutdown();
        Ok(())
    }

    /// Stops the simulation loop and the HTTP server.
    pub fn shutdown(mut self) {
        self.stop.store(true, Ordering::Relaxed);
        if let Some(sim) = self.sim.take() {
            let _ = sim.join();
        }
        if let Some(rt) = self.runtime.take() {
            rt.shutdown_background();
        }
    }
}

/// Builds the session and agent, then starts the simulation loop, the agent
/// thread and the HTTP server on `addr` (port 0 picks a free port).
pub fn start(opts: LiveOptions, addr: SocketAddr) -> Result<LiveServer> {
    let agent = agent_from_spec(&opts.agent, Arc::clone(&opts.map), &opts.config)?;
    let session = Session::new(Arc::clone(&opts.map), opts.story.clone(), opts.config.clone(), &opts.agent, opts.seed)?;
    let (tx, _) = broadcast::channel(BROADCAST_CAPACITY);
    let hub = Arc::new(Hub {
        state: Mutex::new(HubState {
            history: Vec::new(),
            snapshot: StateSnapshot {
                v: LIVE_SCHEMA.into(),
                seq: 0,
                tick: 0,
                t: 0.0,
                goal: session.goal().to_string(),
                world: session.world().clone(),
                finished: false,
                outcome: None,
            },
            keys: HashMap::new(),
        }),
        tx,
        map: Arc::clone(&opts.map),
        story: opts.story.clone(),
        agent: opts.agent.clone(),
        config: opts.config.clone(),
        realtime: !opts.headless,
        human: session.inbox(),
        wizard: session.wizard(),
    });

    let runtime = tokio::runtime::Builder::new_multi_thread().enable_all().build().context("starting runtime")?;
    let listener = runtime.block_on(tokio::net::TcpListener::bind(addr)).with_context(|| format!("binding {addr}"))?;
    let addr = listener.local_addr()?;
    let app = router(Arc::clone(&hub));
    runtime.spawn(async move {
        let _ = axum::serve(listener, app).await;
    });

    let (to_agent, agent_rx) = mpsc::channel();
    let (agent_tx, from_agent) = mpsc::channel();
    agent_thread(agent, Arc::clone(&opts.map), agent_rx, agent_tx);
    let stop = Arc::new(AtomicBool::new(false));
    let sim_loop = SimLoop {
        session,
        hub: Arc::clone(&hub),
        headless: opts.headless,
        out: opts.out,
        stop: Arc::clone(&stop),
        to_agent,
        from_agent,
    };
    let sim = std::thread::spawn(move || sim_loop.run());
    Ok(LiveServer { addr, hub, stop, sim: Some(sim), runtime: Some(runtime) })
}
