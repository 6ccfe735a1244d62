//! The batch commands: run a scenario, replay a log under teacher forcing,
//! evaluate predictions and export a dataset.

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, Instant};

use anyhow::{Context, Result};
use sdnloop::config::SimConfig;
use sdnloop::harness::{agent_from_spec, run_closed_loop, AgentBackend, Session, SessionFault, TaskKind};
use sdnloop::metrics::{evaluate, read_predictions, write_predictions, EvalConfig, MetricReport};
use sdnloop::scenario::{export_instruction_pairs, teacher_forcing_replay, write_dataset, SessionLog};
use sdnloop::world::MapGraph;

use crate::inputs::resolve_scenario;

/// Process exit codes: task failure is kept apart from tool faults so CI
/// can tell an agent that failed the task from a broken run.
pub mod exit {
    pub const SUCCESS: i32 = 0;
    pub const FAULT: i32 = 1;
    pub const TASK_FAILURE: i32 = 2;
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    /// Map file or bundled map name; the storyboard's map when `None`.
    pub map: Option<String>,
    /// Storyboard file or bundled storyboard name.
    pub story: String,
    /// `builtin:oracle`, `builtin:lanefollow` or `remote:<endpoint>`.
    pub agent: String,
    /// Overrides the storyboard seed.
    pub seed: Option<u64>,
    /// Log path; `<story id>.log.jsonl` when `None`.
    pub out: Option<PathBuf>,
    /// Fast-forward sim time instead of pacing ticks to the wall clock.
    pub headless: bool,
    pub config: SimConfig,
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub success: bool,
    pub reason: Option<String>,
    pub t: f64,
    pub log_path: PathBuf,
}

impl RunSummary {
    pub fn exit_code(&self) -> i32 {
        if self.success {
            exit::SUCCESS
        } else {
            exit::TASK_FAILURE
        }
    }
}

fn write_log(log: &SessionLog, path: &Path) -> Result<()> {
    log.write(path).with_context(|| format!("writing log {}", path.display()))
}

/// Paces ticks to the wall clock. The agent is queried in line and its
/// measured wall time becomes the decision latency.
fn run_realtime(mut session: Session, agent: &mut dyn AgentBackend) -> Result<SessionLog, SessionFault> {
    let dt = session.config().dt();
    let map = Arc::clone(session.map());
    let start = Instant::now();
    let result = (|| -> Result<(), sdnloop::harness::HarnessError> {
        loop {
            session.begin_tick()?;
            if session.decision_due() {
                let pending = session.open_decision(TaskKind::ClosedLoop)?;
                let t0 = Instant::now();
                let simulated = agent.sim_latency();
                let record = pending.run(agent, &map, simulated);
                let latency = t0.elapsed().as_secs_f64().max(simulated);
                session.submit(&pending, record, latency);
            }
            if session.end_tick()?.is_some() {
                return Ok(());
            }
            let due = start + Duration::from_secs_f64(session.tick() as f64 * dt);
            if let Some(wait) = due.checked_duration_since(Instant::now()) {
                std::thread::sleep(wait);
            }
        }
    })();
    match result {
        Ok(()) => Ok(session.into_log()),
        Err(error) => {
            session.abort(&error.to_string());
            Err(SessionFault { log: session.log(), error })
        }
    }
}

/// Runs a scenario to its outcome and writes the session log. Config and
/// agent errors are reported before the simulation starts; a fault during
/// the run still writes the log, closed with a failure outcome.
pub fn cmd_run(rc: &RunConfig) -> Result<RunSummary> {
    let scenario = resolve_scenario(rc.map.as_deref(), &rc.story)?;
    let mut agent = agent_from_spec(&rc.agent, Arc::clone(&scenario.map), &rc.config)?;
    let log_path = rc.out.clone().unwrap_or_else(|| PathBuf::from(format!("{}.log.jsonl", scenario.story.id)));
    let session = Session::new(scenario.map, scenario.story, rc.config.clone(), &rc.agent, rc.seed)?;
    let result =
        if rc.headless { run_closed_loop(session, agent.as_mut()) } else { run_realtime(session, agent.as_mut()) };
    let log = match result {
        Ok(log) => log,
        Err(fault) => {
            write_log(&fault.log, &log_path)?;
            return Err(fault.error).context(format!("run aborted; partial log in {}", log_path.display()));
        }
    };
    write_log(&log, &log_path)?;
    let (t, success, reason, _) = log.outcome()?;
    Ok(RunSummary { success, reason: reason.map(str::to_string), t, log_path })
}

fn read_log(path: &Path) -> Result<SessionLog> {
    SessionLog::read(path).with_context(|| format!("reading log {}", path.display()))
}

/// Teacher-forced replay of a recorded session against an agent; writes the
/// prediction file and returns the number of items.
pub fn cmd_replay(log_path: &Path, agent_spec: &str, out: &Path) -> Result<usize> {
    let log = read_log(log_path)?;
    let header = log.header()?;
    let map = Arc::new(MapGraph::from_document(header.map.clone())?);
    let mut agent = agent_from_spec(agent_spec, map, &header.config)?;
    let items = teacher_forcing_replay(&log, agent.as_mut())?;
    std::fs::write(out, write_predictions(&items)).with_context(|| format!("writing {}", out.display()))?;
    Ok(items.len())
}

/// Scores a prediction file, optionally restricted to one task. The report
/// is written as JSON when `out` is given.
pub fn cmd_eval(
    predictions: &Path,
    task: Option<&str>,
    eval_config: Option<&Path>,
    out: Option<&Path>,
) -> Result<MetricReport> {
    let text = std::fs::read_to_string(predictions).with_context(|| format!("reading {}", predictions.display()))?;
    let mut items = read_predictions(&text).with_context(|| format!("parsing {}", predictions.display()))?;
    if let Some(task) = task {
        items.retain(|i| i.task == task);
        anyhow::ensure!(!items.is_empty(), "no {task} items in {}", predictions.display());
    }
    let cfg = match eval_config {
        Some(p) => serde_json::from_str::<EvalConfig>(
            &std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?,
        )
        .with_context(|| format!("parsing eval config {}", p.display()))?,
        None => EvalConfig::default(),
    };
    let report = evaluate(&items, &cfg)?;
    if let Some(out) = out {
        let json = serde_json::to_string_pretty(&report)?;
        std::fs::write(out, json + "\n").with_context(|| format!("writing {}", out.display()))?;
    }
    Ok(report)
}

/// Exports one instruction-pair record per decision; returns the count.
pub fn cmd_export(log_path: &Path, out: &Path) -> Result<usize> {
    let log = read_log(log_path)?;
    let records = export_instruction_pairs(&log)?;
    write_dataset(&records, out).with_context(|| format!("writing {}", out.display()))?;
    Ok(records.len())
}
