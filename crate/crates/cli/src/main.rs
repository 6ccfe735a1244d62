//! `sdnloop` command-line entry point.

use std::net::SocketAddr;
use std::path::PathBuf;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use sdnloop_cli::{
    cmd_eval, cmd_export, cmd_replay, cmd_run, exit, live, load_config, resolve_scenario, LiveOptions, RateOverrides,
    RunConfig, CONFIG_ENV,
};

#[derive(Parser)]
#[command(name = "sdnloop", version, about = "Closed-loop situated-dialogue navigation testbed")]
struct Cli {
    /// Simulation config document (`sdnloop-sim/1`).
    #[arg(long, global = true, env = CONFIG_ENV)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct SessionArgs {
    /// Map file or bundled map name (townA, townB, ...). Defaults to the
    /// storyboard's map.
    #[arg(long)]
    map: Option<String>,
    /// Storyboard file or bundled storyboard name, e.g. `goal_change` with
    /// `--map townA`.
    #[arg(long)]
    story: String,
    /// builtin:oracle, builtin:lanefollow or remote:<endpoint>.
    #[arg(long, default_value = "builtin:oracle")]
    agent: String,
    /// Overrides the storyboard seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Session log output path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Run sim time as fast as possible instead of pacing to the wall clock.
    #[arg(long)]
    headless: bool,
    #[arg(long)]
    tick_hz: Option<u32>,
    #[arg(long)]
    decision_hz: Option<u32>,
}

impl SessionArgs {
    fn rates(&self) -> RateOverrides {
        RateOverrides { tick_hz: self.tick_hz, decision_hz: self.decision_hz }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run a storyboard in closed loop and write the session log. Exits 0 on
    /// success, 2 when the agent fails the task and 1 on errors.
    Run(SessionArgs),
    /// Teacher-forced replay of a session log against an agent.
    Replay {
        #[arg(long)]
        log: PathBuf,
        #[arg(long, default_value = "builtin:oracle")]
        agent: String,
        /// Prediction file output path.
        #[arg(long, default_value = "predictions.jsonl")]
        out: PathBuf,
    },
    /// Score a prediction file and print the metric table.
    Eval {
        #[arg(long)]
        predictions: PathBuf,
        /// Only score items of this task (NfD, RfN, ...).
        #[arg(long)]
        task: Option<String>,
        /// Evaluation config (tokenizer, thresholds, ...).
        #[arg(long)]
        eval_config: Option<PathBuf>,
        /// Report output path (JSON).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Export a session log as an instruction-pair dataset.
    Export {
        #[arg(long)]
        log: PathBuf,
        #[arg(long, default_value = "dataset.jsonl")]
        out: PathBuf,
    },
    /// Serve a live session over HTTP until interrupted.
    Serve {
        #[command(flatten)]
        session: SessionArgs,
        #[arg(long, default_value_t = 8765)]
        port: u16,
        /// Address to bind.
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
    },
}

fn run(cli: Cli) -> Result<i32> {
    let config = cli.config.as_deref();
    match cli.command {
        Command::Run(a) => {
            let rc = RunConfig {
                config: load_config(config, a.rates())?,
                map: a.map,
                story: a.story,
                agent: a.agent,
                seed: a.seed,
                out: a.out,
                headless: a.headless,
            };
            let summary = cmd_run(&rc)?;
            match &summary.reason {
                None => println!("success at {:.2} s; log written to {}", summary.t, summary.log_path.display()),
                Some(r) => {
                    println!("failure at {:.2} s ({r}); log written to {}", summary.t, summary.log_path.display())
                }
            }
            Ok(summary.exit_code())
        }
        Command::Replay { log, agent, out } => {
            let n = cmd_replay(&log, &agent, &out)?;
            println!("{n} predictions written to {}", out.display());
            Ok(exit::SUCCESS)
        }
        Command::Eval { predictions, task, eval_config, out } => {
            let report = cmd_eval(&predictions, task.as_deref(), eval_config.as_deref(), out.as_deref())?;
            print!("{}", report.table());
            Ok(exit::SUCCESS)
        }
        Command::Export { log, out } => {
            let n = cmd_export(&log, &out)?;
            println!("{n} records written to {}", out.display());
            Ok(exit::SUCCESS)
        }
        Command::Serve { session: a, port, host } => {
            let config = load_config(config, a.rates())?;
            let scenario = resolve_scenario(a.map.as_deref(), &a.story)?;
            let addr: SocketAddr = format!("{host}:{port}").parse()?;
            let opts = LiveOptions {
                map: scenario.map,
                story: scenario.story,
                config,
                agent: a.agent,
                seed: a.seed,
                headless: a.headless,
                out: a.out,
            };
            let server = live::start(opts, addr)?;
            println!("serving {} on http://{}", sdnloop_cli::LIVE_SCHEMA, server.addr());
            server.wait()?;
            Ok(exit::SUCCESS)
        }
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            std::process::exit(if e.use_stderr() { exit::FAULT } else { exit::SUCCESS });
        }
    };
    let code = run(cli).unwrap_or_else(|e| {
        eprintln!("error: {e:#}");
        exit::FAULT
    });
    std::process::exit(code);
}
