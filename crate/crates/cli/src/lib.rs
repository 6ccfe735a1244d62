//! Operator tooling for the sdnloop testbed: scenario runs, teacher-forced
//! replay, evaluation, dataset export and the live-session server behind
//! the `sdnloop` binary.

pub mod commands;
pub mod inputs;
pub mod live;

pub use commands::{cmd_eval, cmd_export, cmd_replay, cmd_run, exit, RunConfig, RunSummary};
pub use inputs::{load_config, resolve_scenario, InputError, RateOverrides, Scenario, CONFIG_ENV};
pub use live::{LiveOptions, LiveServer, LIVE_SCHEMA};
